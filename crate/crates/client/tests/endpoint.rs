//! Against an in-process endpoint: loading, introspection, and every
//! translation route agreeing with the reference evaluator.

use cubeql_client::cube::{fetch_cube, fetch_level_stats, load_cube};
use cubeql_client::{run_bench, BenchOptions, ExecError, SparqlClient};
use cubeql_core::config::{GraphConfig, LevelStats};
use cubeql_core::fixtures::*;
use cubeql_core::instance::CubeInstance;
use cubeql_core::optimize::ScenarioId;
use cubeql_core::oracle::eval;
use cubeql_core::pipeline::{compile, Context, Improvement};
use cubeql_core::qb4olap::{emit_qb4olap, parse_cube_schema_for, standard_prefixes};
use cubeql_core::rdf::Prefixes;
use cubeql_core::sparql::render;
use cubeql_core::ssb;
use cubeql_core::table::DEFAULT_TOLERANCE;
use cubeql_memstore::{spawn_empty, Endpoint};

async fn loaded(cube: &CubeInstance, graphs: &GraphConfig) -> (Endpoint, SparqlClient) {
    let ep = spawn_empty().await.unwrap();
    let client = SparqlClient::new(&ep.query_url(), Some(&ep.update_url()));
    load_cube(&client, graphs, cube).await.unwrap();
    (ep, client)
}

fn prefixes(extra: impl IntoIterator<Item = (String, String)>) -> Prefixes {
    let mut p = standard_prefixes();
    for (k, v) in extra {
        p.insert(&k, &v);
    }
    p
}

fn sorted_rows(c: &CubeInstance) -> Vec<String> {
    let mut v: Vec<String> = c.observations.rows.iter().map(|o| format!("{} {:?} {:?}", o.iri, o.coordinates, o.measures)).collect();
    v.sort();
    v
}

#[tokio::test(flavor = "multi_thread")]
async fn fetched_cube_matches_what_was_loaded() {
    for (cube, graphs) in [(asylum_cube(true), asylum_graphs()), (ssb::generate_ssb_toy(10_000, 3), ssb::ssb_graphs())] {
        let (ep, client) = loaded(&cube, &graphs).await;
        let (back, report) = fetch_cube(&client, &graphs).await.unwrap();
        // The same graphs parsed without the endpoint; a schema built in
        // code may list levels in another order.
        let e = emit_qb4olap(&cube.schema, &cube.dimensions, &cube.observations);
        let (local, _) = parse_cube_schema_for(&e.schema_graph, &graphs.dataset).unwrap();
        assert_eq!(back.schema, local, "{}", cube.schema.name);
        // Member lists are sets; the store need not keep their order.
        let norm = |c: &CubeInstance| {
            let mut d = c.dimensions.clone();
            d.members.values_mut().for_each(|v| v.sort());
            d
        };
        assert!(norm(&back) == norm(&cube), "dimension members differ for {}", cube.schema.name);
        assert_eq!(sorted_rows(&back), sorted_rows(&cube));
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
        assert_eq!(back.observations.skipped, 0);
        let stats = fetch_level_stats(&client, &graphs).await.unwrap();
        assert_eq!(stats, LevelStats::from_members(&cube.dimensions));
        ep.shutdown().await;
    }
}

/// Naive and every scenario, each against the oracle, on one cube.
async fn all_routes_agree(cube: &CubeInstance, graphs: &GraphConfig, pfx: &Prefixes, queries: &[(String, String)]) {
    let (ep, client) = loaded(cube, graphs).await;
    let stats = LevelStats::from_members(&cube.dimensions);
    let cx = Context { schema: &cube.schema, graphs, prefixes: pfx, stats: &stats };
    let mut imps = vec![Improvement::None];
    imps.extend(ScenarioId::all().map(Improvement::Scenario));
    for (id, q) in queries {
        let naive = compile(q, &cx, &Improvement::None).unwrap();
        let expected = eval(&naive.simplified, cube).unwrap();
        for imp in &imps {
            let c = compile(q, &cx, imp).unwrap();
            let got = client.execute(c.final_ir()).await.unwrap_or_else(|e| panic!("{id} {imp:?}: {e}\n{}", render(c.final_ir())));
            if let Err(d) = got.compare(&expected, DEFAULT_TOLERANCE) {
                panic!("{id} {imp:?}: {d:?}\n{}", render(c.final_ir()));
            }
        }
    }
    ep.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn asylum_queries_agree_with_the_oracle() {
    let queries: Vec<(String, String)> = [
        ("africa", QUERY_AFRICA_CITIZENS),
        ("redundant", QUERY_REDUNDANT_NAVIGATION),
        ("asia", QUERY_ASIA_OVER_5000),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    all_routes_agree(&asylum_cube(true), &asylum_graphs(), &prefixes(asylum_prefixes()), &queries).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn ssb_queries_agree_with_the_oracle() {
    let cube = ssb::generate_ssb_toy(10_000, 7);
    all_routes_agree(&cube, &ssb::ssb_graphs(), &prefixes(ssb::ssb_prefixes()), &ssb::ssb_queries()).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn endpoint_failures_have_codes() {
    let ep = spawn_empty().await.unwrap();
    let client = SparqlClient::new(&ep.query_url(), None);
    let e = client.select("SELECT nonsense").await.unwrap_err();
    assert!(matches!(e, ExecError::Endpoint { status: 400, .. }), "{e:?}");
    assert_eq!(e.code(), "ENDPOINT_ERROR");
    ep.shutdown().await;
    let e = SparqlClient::new("http://127.0.0.1:9/sparql", None).select("ASK {}").await.unwrap_err();
    assert_eq!(e.code(), "ENDPOINT_UNREACHABLE");
}

#[tokio::test(flavor = "multi_thread")]
async fn bench_smoke() {
    let cube = ssb::generate_ssb_toy(100_000, 1);
    let graphs = ssb::ssb_graphs();
    let (ep, client) = loaded(&cube, &graphs).await;
    let stats = LevelStats::from_members(&cube.dimensions);
    let pfx = prefixes(ssb::ssb_prefixes());
    let cx = Context { schema: &cube.schema, graphs: &graphs, prefixes: &pfx, stats: &stats };
    let mix: Vec<(String, String)> =
        ssb::ssb_queries().into_iter().map(|(id, q)| (id, compile(&q, &cx, &Improvement::None).unwrap().naive_sparql())).collect();
    let r = run_bench(&client, "naive", &mix, &BenchOptions::default()).await;
    assert!(r.errors.is_empty(), "{:?}", r.errors);
    assert_eq!(r.per_query.len(), 13);
    assert_eq!(r.queries_executed, 26);
    assert!(r.power > 0.0 && r.throughput > 0.0);
    assert!((r.composite - (r.power * r.throughput).sqrt()).abs() < 1e-6 * r.composite);
    ep.shutdown().await;
}

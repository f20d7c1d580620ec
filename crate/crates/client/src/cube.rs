//! Moving cubes in and out of an endpoint.

use crate::executor::{ExecError, SparqlClient};
use cubeql_core::config::GraphConfig;
use cubeql_core::instance::CubeInstance;
use cubeql_core::model::CubeSchema;
use cubeql_core::optimize::LevelStats;
use cubeql_core::qb4olap::vocab::{QB4O, QB_DATASET};
use cubeql_core::qb4olap::{
    emit_qb4olap, introspection_query, members_query, parse_cube_schema_for, parse_dimension_instances,
    parse_observations, LoadReport, MetadataError,
};
use cubeql_core::rdf::{write_ntriples, Graph, Term};
use cubeql_core::sparql::graph_from_json;
use cubeql_core::table::Value;
use thiserror::Error;

/// Triples per INSERT DATA request.
pub const CHUNK: usize = 5000;

#[derive(Debug, Error)]
pub enum CubeError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
}

impl CubeError {
    pub fn code(&self) -> &'static str {
        match self {
            CubeError::Exec(e) => e.code(),
            CubeError::Metadata(e) => e.code(),
        }
    }
}

fn has_blank(g: &Graph) -> bool {
    g.triples().iter().any(|t| matches!(t.s, Term::Blank(_)) || matches!(t.o, Term::Blank(_)))
}

/// Writes `g` into the named graph `graph` with INSERT DATA. A graph with
/// blank nodes goes in one request, since labels are scoped to a request.
pub async fn load_graph(client: &SparqlClient, graph: &str, g: &Graph) -> Result<(), ExecError> {
    let chunk = if has_blank(g) { g.len().max(1) } else { CHUNK };
    for part in g.triples().chunks(chunk) {
        let mut sub = Graph::new();
        for t in part {
            sub.insert(t.clone());
        }
        client.update(&format!("INSERT DATA {{ GRAPH <{graph}> {{\n{}}} }}", write_ntriples(&sub))).await?;
    }
    Ok(())
}

/// Emits the cube as QB4OLAP and loads schema and observations into the
/// configured graphs, replacing what was there.
pub async fn load_cube(client: &SparqlClient, cfg: &GraphConfig, cube: &CubeInstance) -> Result<(), ExecError> {
    let e = emit_qb4olap(&cube.schema, &cube.dimensions, &cube.observations);
    for g in [&cfg.schema_graph, &cfg.instance_graph] {
        client.update(&format!("DROP SILENT GRAPH <{g}>")).await?;
    }
    load_graph(client, &cfg.schema_graph, &e.schema_graph).await?;
    load_graph(client, &cfg.instance_graph, &e.instance_graph).await
}

async fn fetch_graph(client: &SparqlClient, q: &str) -> Result<Graph, ExecError> {
    Ok(graph_from_json(&client.query_json(q).await?)?)
}

/// Reads the schema graph's metadata and members back into a schema and
/// member data.
pub async fn fetch_schema(client: &SparqlClient, cfg: &GraphConfig) -> Result<(CubeInstance, LoadReport), CubeError> {
    let mut g = fetch_graph(client, &introspection_query(&cfg.schema_graph)).await?;
    let (schema, mut report) = parse_cube_schema_for(&g, &cfg.dataset)?;
    g.extend(&fetch_graph(client, &members_query(&cfg.schema_graph)).await?);
    let (dimensions, r2) = parse_dimension_instances(&g, &schema);
    report.warnings.extend(r2.warnings);
    let observations = cubeql_core::instance::ObservationSet { dataset: cfg.dataset.clone(), ..Default::default() };
    Ok((CubeInstance { schema, dimensions, observations }, report))
}

/// Schema, members and every observation of the configured dataset.
pub async fn fetch_cube(client: &SparqlClient, cfg: &GraphConfig) -> Result<(CubeInstance, LoadReport), CubeError> {
    let (mut cube, mut report) = fetch_schema(client, cfg).await?;
    let q = format!(
        "SELECT ?s ?p ?o WHERE {{ GRAPH <{}> {{ ?s <{QB_DATASET}> <{}> . ?s ?p ?o }} }}",
        cfg.instance_graph, cfg.dataset
    );
    let g = fetch_graph(client, &q).await?;
    let (obs, r) = parse_observations(&g, &cube.schema, Some(&cfg.dataset));
    report.warnings.extend(r.warnings);
    cube.observations = obs;
    Ok((cube, report))
}

/// Member count per level, counted by the endpoint.
pub async fn fetch_level_stats(client: &SparqlClient, cfg: &GraphConfig) -> Result<LevelStats, ExecError> {
    let q = format!(
        "SELECT ?l (COUNT(DISTINCT ?m) AS ?n) WHERE {{ GRAPH <{}> {{ ?m <{QB4O}memberOf> ?l }} }} GROUP BY ?l",
        cfg.schema_graph
    );
    let t = client.select(&q).await?;
    let mut stats = LevelStats::default();
    for row in t.rows {
        if let [Value::Iri(l), Value::Number(n)] = row.as_slice() {
            stats.insert(l.clone(), *n as u64);
        }
    }
    Ok(stats)
}

/// Schema only, for callers that do not need members.
pub async fn fetch_cube_schema(client: &SparqlClient, cfg: &GraphConfig) -> Result<CubeSchema, CubeError> {
    Ok(fetch_schema(client, cfg).await?.0.schema)
}

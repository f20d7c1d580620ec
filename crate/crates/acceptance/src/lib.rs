//! The acceptance criteria as functions. Each returns a one-line detail on
//! success and an explanation on failure; `tests/acceptance.rs` times them
//! and prints the verdicts.
//!
//! Shape checks parse the generated SPARQL with spargebra, a grammar and
//! algebra independent of our IR, so they hold modulo variable names and
//! layout.

use cubeql_client::cube::load_cube;
use cubeql_client::SparqlClient;
use cubeql_core::config::{GraphConfig, LevelStats};
use cubeql_core::cql::{Op, PatternClass, ROp, TypedProgram, WfCondition};
use cubeql_core::fixtures::*;
use cubeql_core::instance::CubeInstance;
use cubeql_core::metrics::{composite, throughput};
use cubeql_core::model::CubeSchema;
use cubeql_core::optimize::{parse_strategies, ScenarioId};
use cubeql_core::oracle::eval;
use cubeql_core::pipeline::{check, compile, Context, Improvement};
use cubeql_core::qb4olap::standard_prefixes;
use cubeql_core::random::{random_program, GenConfig};
use cubeql_core::rdf::Prefixes;
use cubeql_core::simplify::simplify;
use cubeql_core::soundness::{check_program, Check};
use cubeql_core::sparql::render;
use cubeql_core::ssb;
use cubeql_core::table::DEFAULT_TOLERANCE;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spargebra::algebra::{AggregateExpression, AggregateFunction, Expression, Function, GraphPattern};
use spargebra::term::{NamedNodePattern, TermPattern, TriplePattern};
use std::collections::{BTreeMap, BTreeSet};

pub type Verdict = Result<String, String>;

/// Seed and size of the generated cube used by criteria 5, 6 and 8.
pub const TOY_DIVISOR: usize = 10_000;
pub const TOY_SEED: u64 = 20_240_601;

const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
const QB4O_MEMBER_OF: &str = "http://purl.org/qb4olap/cubes#memberOf";
const SC: &str = "http://www.fing.edu.uy/cubes/schemas/migr_asyapp#";

fn asylum_prefixes_table() -> Prefixes {
    let mut p = Prefixes::new();
    for (k, v) in asylum_prefixes() {
        p.insert(&k, &v);
    }
    p
}

fn ssb_prefixes_table() -> Prefixes {
    let mut p = standard_prefixes();
    for (k, v) in ssb::ssb_prefixes() {
        p.insert(&k, &v);
    }
    p
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Algebra helpers

fn parse_sparql(text: &str) -> Result<GraphPattern, String> {
    match spargebra::SparqlParser::new().parse_query(text) {
        Ok(spargebra::Query::Select { pattern, .. }) => Ok(pattern),
        Ok(other) => Err(format!("not a SELECT: {other}")),
        Err(e) => Err(format!("spargebra rejects the query: {e}\n{text}")),
    }
}

fn children(p: &GraphPattern) -> Vec<&GraphPattern> {
    use GraphPattern::*;
    match p {
        Join { left, right } | LeftJoin { left, right, .. } | Union { left, right } | Minus { left, right } => {
            vec![left, right]
        }
        Filter { inner, .. }
        | Graph { inner, .. }
        | Extend { inner, .. }
        | OrderBy { inner, .. }
        | Project { inner, .. }
        | Distinct { inner }
        | Reduced { inner }
        | Slice { inner, .. }
        | Group { inner, .. }
        | Service { inner, .. } => vec![inner],
        _ => vec![],
    }
}

/// Every node, parents before children, left before right.
fn preorder(p: &GraphPattern) -> Vec<&GraphPattern> {
    let mut out = vec![p];
    for c in children(p) {
        out.extend(preorder(c));
    }
    out
}

fn triples(p: &GraphPattern) -> Vec<&TriplePattern> {
    preorder(p)
        .into_iter()
        .flat_map(|n| match n {
            GraphPattern::Bgp { patterns } => patterns.iter().collect(),
            _ => vec![],
        })
        .collect()
}

/// String literals quoted in an expression's printed form.
fn string_constants(e: &Expression) -> BTreeSet<String> {
    let s = e.to_string();
    let mut out = BTreeSet::new();
    let mut rest = s.as_str();
    while let Some(i) = rest.find('"') {
        let tail = &rest[i + 1..];
        let Some(j) = tail.find('"') else { break };
        out.insert(tail[..j].to_string());
        rest = &tail[j + 1..];
    }
    out
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------
// 1. Simplification fidelity

pub fn simplification_fidelity() -> Verdict {
    let s = asylum_cube(false).schema;
    let (tp, _) = check(QUERY_REDUNDANT_NAVIGATION, &s).map_err(|e| e.to_string())?;
    let out = simplify(&tp, &s).map_err(|e| e.to_string())?;
    let got = out.program.program.ops();
    let want = vec![
        Op::Slice { target: "citizenshipDim".into() },
        Op::RollUp { dimension: "timeDim".into(), level: "year".into() },
    ];
    ensure(got == want, || format!("got\n{}", out.program.program))?;
    Ok(format!("{} statements to {}: {}", tp.len(), got.len(), out.program.program.to_string().replace('\n', " ")))
}

// ---------------------------------------------------------------------------
// 2. Well-formedness

pub fn well_formedness() -> Verdict {
    let s = asylum_cube(false).schema;
    let (bad, r) = check(QUERY_DICE_BETWEEN_NAVIGATION, &s).map_err(|e| e.to_string())?;
    ensure(!r.well_formed(), || "the measure Dice between navigations was accepted".into())?;
    ensure(r.violations.len() == 1, || format!("{:?}", r.violations))?;
    let v = &r.violations[0];
    ensure(v.condition == WfCondition::MeasureDiceBeforeNavigation, || format!("{v:?}"))?;
    ensure(matches!(bad.program.statements[v.statement].op, Op::Dice { .. }), || format!("flagged statement {}", v.statement))?;

    let (_, ok) = check(QUERY_AFRICA_CITIZENS, &s).map_err(|e| e.to_string())?;
    ensure(ok.well_formed(), || format!("{:?}", ok.violations))?;
    ensure(ok.class == PatternClass::P2, || format!("class {:?}", ok.class))?;
    Ok(format!("rejected with condition {} at statement {}; seven-statement program accepted as P2", v.condition.label(), v.statement + 1))
}

// ---------------------------------------------------------------------------
// 3. Translation shape

fn asylum_compile(cql: &str, imp: &Improvement) -> Result<String, String> {
    let s = asylum_cube(false).schema;
    let (g, p, st) = (asylum_graphs(), asylum_prefixes_table(), asylum_level_stats());
    let cx = Context { schema: &s, graphs: &g, prefixes: &p, stats: &st };
    let c = compile(cql, &cx, imp).map_err(|e| e.to_string())?;
    Ok(render(c.final_ir()))
}

pub fn translation_shape() -> Verdict {
    let text = asylum_compile(QUERY_ASIA_OVER_5000, &Improvement::None)?;
    let root = parse_sparql(&text)?;
    let nodes = preorder(&root);

    let groups: Vec<_> = nodes
        .iter()
        .filter_map(|n| match n {
            GraphPattern::Group { inner, variables, aggregates } => Some((inner, variables, aggregates)),
            _ => None,
        })
        .collect();
    ensure(groups.len() == 1, || format!("{} GROUP nodes", groups.len()))?;
    let (inner, vars, aggs) = groups[0];
    ensure(vars.len() == 6, || format!("{} grouping variables", vars.len()))?;
    ensure(aggs.len() == 1, || format!("{} aggregates", aggs.len()))?;
    let (agg_var, agg) = &aggs[0];
    let cast_ok = matches!(agg,
        AggregateExpression::FunctionCall { name: AggregateFunction::Sum, distinct: false,
            expr: Expression::FunctionCall(Function::Custom(f), args) }
        if f.as_str() == XSD_INTEGER && matches!(args.as_slice(), [Expression::Variable(_)]));
    ensure(cast_ok, || format!("aggregate is {agg}"))?;

    // The level filter sits under the grouping.
    let inner_filters: Vec<&Expression> = preorder(inner)
        .into_iter()
        .filter_map(|n| match n {
            GraphPattern::Filter { expr, .. } => Some(expr),
            _ => None,
        })
        .collect();
    ensure(inner_filters.len() == 1, || format!("{} filters under GROUP", inner_filters.len()))?;
    let consts = string_constants(inner_filters[0]);
    ensure(consts == set(&["Asia", "France", "United Kingdom"]), || format!("inner filter constants {consts:?}"))?;

    // The aggregate filter sits above it, on the projected alias of the sum.
    let mut alias = agg_var.clone();
    for n in &nodes {
        if let GraphPattern::Extend { variable, expression: Expression::Variable(v), .. } = n {
            if v == agg_var {
                alias = variable.clone();
            }
        }
    }
    let outer = nodes.iter().find_map(|n| match n {
        GraphPattern::Filter { expr, inner } if preorder(inner).iter().any(|m| matches!(m, GraphPattern::Group { .. })) => Some(expr),
        _ => None,
    });
    let outer = outer.ok_or("no FILTER above the grouping")?;
    let ok = matches!(outer, Expression::Greater(a, b)
        if **a == Expression::Variable(alias.clone())
        && matches!(&**b, Expression::Literal(l) if l.value() == "5000"));
    ensure(ok, || format!("outer filter is {outer}, aggregate alias ?{}", alias.as_str()))?;
    Ok(format!("GROUP BY {} vars, SUM(xsd:integer(..)), inner filter on {consts:?}, outer {outer}", vars.len()))
}

// ---------------------------------------------------------------------------
// 4. Optimizer shape

/// Dimension of every member variable, from its `qb4o:memberOf` pattern.
fn member_dims(ts: &[&TriplePattern], s: &CubeSchema) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for t in ts {
        // `?m qb4o:memberOf level`, or `?o level ?m` from an observation.
        let (v, level) = match (&t.subject, &t.predicate, &t.object) {
            (TermPattern::Variable(v), NamedNodePattern::NamedNode(p), TermPattern::NamedNode(l)) if p.as_str() == QB4O_MEMBER_OF => (v, l.as_str()),
            (_, NamedNodePattern::NamedNode(p), TermPattern::Variable(v)) => (v, p.as_str()),
            _ => continue,
        };
        if let Some(d) = s.dimensions.iter().position(|d| d.levels.iter().any(|l| l.iri == level)) {
            out.insert(v.as_str().to_string(), d);
        }
    }
    out
}

fn graph_nodes<'a>(root: &'a GraphPattern) -> Vec<(String, &'a GraphPattern)> {
    preorder(root)
        .into_iter()
        .filter_map(|n| match n {
            GraphPattern::Graph { name: NamedNodePattern::NamedNode(g), inner } => Some((g.as_str().to_string(), &**inner)),
            _ => None,
        })
        .collect()
}

pub fn optimizer_shape() -> Verdict {
    let s = asylum_cube(false).schema;
    let graphs = asylum_graphs();
    let es7 = asylum_compile(QUERY_ASIA_OVER_5000, &Improvement::Scenario(ScenarioId::new(7).unwrap()))?;
    let root = parse_sparql(&es7)?;
    let gs = graph_nodes(&root);
    ensure(gs.len() == 2, || format!("{} GRAPH blocks\n{es7}", gs.len()))?;
    let schema_block = gs.iter().find(|(g, _)| *g == graphs.schema_graph).ok_or("no schema graph block")?.1;
    let asia = triples(schema_block).iter().any(|t| {
        matches!(&t.predicate, NamedNodePattern::NamedNode(p) if p.as_str() == format!("{SC}contName"))
            && matches!(&t.object, TermPattern::Literal(l) if l.value() == "Asia")
    });
    ensure(asia, || format!("no contName \"Asia\" triple pattern\n{es7}"))?;
    let values: Vec<BTreeSet<String>> = preorder(schema_block)
        .into_iter()
        .filter_map(|n| match n {
            GraphPattern::Values { variables, bindings } if variables.len() == 1 => Some(
                bindings.iter().filter_map(|b| b[0].as_ref()).map(|t| match t {
                    spargebra::term::GroundTerm::Literal(l) => l.value().to_string(),
                    other => other.to_string(),
                }).collect(),
            ),
            _ => None,
        })
        .collect();
    ensure(values == [set(&["France", "United Kingdom"])], || format!("VALUES blocks {values:?}"))?;
    let level_filters = preorder(&root)
        .into_iter()
        .filter(|n| matches!(n, GraphPattern::Filter { expr, .. } if string_constants(expr).contains("Asia")))
        .count();
    ensure(level_filters == 0, || "Asia is still tested in a FILTER".into())?;

    // Dimension order under the second ordering criterion.
    let oc2 = asylum_compile(QUERY_ASIA_OVER_5000, &Improvement::Strategies(parse_strategies("S1,S5=oc2").map_err(|e| e.to_string())?))?;
    let root = parse_sparql(&oc2)?;
    let gs = graph_nodes(&root);
    let block = gs.iter().find(|(g, _)| *g == graphs.schema_graph).ok_or("no schema graph block")?.1;
    let ts = triples(block);
    let dims = member_dims(&triples(&root), &s);
    let mut order: Vec<&str> = Vec::new();
    for t in &ts {
        if let TermPattern::Variable(v) = &t.subject {
            if let Some(&d) = dims.get(v.as_str()) {
                let n = s.dimensions[d].name.as_str();
                if !order.contains(&n) {
                    order.push(n);
                }
            }
        }
    }
    ensure(order == ["citDim", "destDim", "timeDim"], || format!("dimension order {order:?}\n{oc2}"))?;
    Ok(format!("ES7: 2 GRAPH blocks, contName \"Asia\" as a pattern, VALUES {:?}; OC2 order {order:?}", values[0]))
}

// ---------------------------------------------------------------------------
// 5. Oracle equivalence

/// Oracle, naive SPARQL and every scenario on the toy cube in an in-process
/// endpoint: the 13 mix queries plus `random` generated programs.
pub async fn oracle_equivalence(random: usize) -> Verdict {
    let cube = ssb::generate_ssb_toy(TOY_DIVISOR, TOY_SEED);
    let graphs = ssb::ssb_graphs();
    let ep = cubeql_memstore::spawn_empty().await.map_err(|e| e.to_string())?;
    let client = SparqlClient::new(&ep.query_url(), Some(&ep.update_url()));
    load_cube(&client, &graphs, &cube).await.map_err(|e| e.to_string())?;
    let result = compare_routes(&cube, &graphs, &client, random).await;
    ep.shutdown().await;
    result
}

async fn compare_routes(cube: &CubeInstance, graphs: &GraphConfig, client: &SparqlClient, random: usize) -> Verdict {
    let stats = LevelStats::from_members(&cube.dimensions);
    let pfx = ssb_prefixes_table();
    let cx = Context { schema: &cube.schema, graphs, prefixes: &pfx, stats: &stats };
    let mut imps = vec![Improvement::None];
    imps.extend(ScenarioId::all().map(Improvement::Scenario));

    let mut programs: Vec<(String, TypedProgram)> = Vec::new();
    for (id, q) in ssb::ssb_queries() {
        let (tp, _) = check(&q, &cube.schema).map_err(|e| format!("{id}: {e}"))?;
        programs.push((id, tp));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(TOY_SEED);
    for i in 0..random {
        programs.push((format!("random#{i}"), random_program(cube, &GenConfig::default(), &mut rng)));
    }

    let (mut compared, mut executed, mut nonempty, mut failures) = (0usize, 0usize, 0usize, Vec::new());
    for (id, tp) in &programs {
        // The oracle sees the program as written, before simplification.
        let expected = eval(tp, cube).map_err(|e| format!("{id}: oracle: {e}"))?;
        if !expected.is_empty() {
            nonempty += 1;
        }
        let text = tp.program.to_string();
        let mut irs = Vec::new();
        for imp in &imps {
            irs.push(compile(&text, &cx, imp).map_err(|e| format!("{id} {imp:?}: {e}\n{text}"))?.final_ir().clone());
        }
        // Routes that render to the same text share one execution.
        let texts: Vec<String> = irs.iter().map(render).collect();
        let mut distinct: Vec<usize> = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            if !distinct.iter().any(|&j| texts[j] == *t) {
                distinct.push(i);
            }
        }
        executed += distinct.len();
        let answers = futures::future::join_all(distinct.iter().map(|&i| client.execute(&irs[i]))).await;
        for (i, (imp, ir)) in imps.iter().zip(&irs).enumerate() {
            compared += 1;
            let k = distinct.iter().position(|&j| texts[j] == texts[i]).expect("every text has a run");
            let verdict = match &answers[k] {
                Ok(t) => t.compare(&expected, DEFAULT_TOLERANCE).map_err(|d| format!("{d:?}")),
                Err(e) => Err(e.to_string()),
            };
            if let Err(e) = verdict {
                if failures.len() < 5 {
                    failures.push(format!("{id} {imp:?}: {e}\n{text}\n{}", render(ir)));
                } else {
                    failures.push(String::new());
                }
            }
        }
    }
    ensure(failures.is_empty(), || {
        format!("{} of {compared} comparisons differ; first:\n{}", failures.len(), failures.iter().take(5).cloned().collect::<Vec<_>>().join("\n\n"))
    })?;
    Ok(format!(
        "{} programs ({} with rows) x {} routes = {compared} tables equal ({executed} distinct queries run) on {} observations",
        programs.len(),
        nonempty,
        imps.len(),
        cube.observations.rows.len()
    ))
}

// ---------------------------------------------------------------------------
// 6. Rewrite-rule soundness

pub fn rewrite_soundness(programs: usize) -> Verdict {
    let cube = ssb::generate_ssb_toy(TOY_DIVISOR, TOY_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(TOY_SEED ^ 0x5eed);
    let mut ran: BTreeMap<Check, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    for _ in 0..programs {
        let tp = random_program(&cube, &GenConfig::default(), &mut rng);
        let out = check_program(&cube, &tp, &mut rng);
        for c in out.ran {
            *ran.entry(c).or_default() += 1;
        }
        failures.extend(out.failures.into_iter().map(|(c, e)| format!("{c:?}: {e}")));
    }
    ensure(failures.is_empty(), || format!("{} failures; first: {}", failures.len(), failures[0]))?;
    let missing: Vec<_> = Check::ALL.iter().filter(|c| !ran.contains_key(c)).collect();
    ensure(missing.is_empty(), || format!("never exercised: {missing:?}"))?;
    Ok(format!("{programs} programs; runs per check {ran:?}"))
}

// ---------------------------------------------------------------------------
// 7. Metric formulas

pub fn metric_formulas() -> Verdict {
    let t = throughput(26, 124.8);
    let c1 = composite(693.1, 750.1);
    let c2 = composite(63.8, 75.6);
    ensure((t - 750.1).abs() <= 0.005 * 750.1, || format!("throughput {t}"))?;
    ensure((c1 - 721.0).abs() <= 0.1, || format!("composite {c1}"))?;
    ensure((c2 - 69.5).abs() <= 0.1, || format!("composite {c2}"))?;
    Ok(format!("throughput {t:.1}, composites {c1:.1} and {c2:.1}"))
}

// ---------------------------------------------------------------------------
// 8. Named-graph bound

/// 2 + dimensions that keep a coordinate + aggregated measures, computed
/// from the simplified program alone.
fn expected_instance_patterns(tp: &TypedProgram, s: &CubeSchema) -> usize {
    let r = tp.result();
    let dims = (0..s.dimensions.len())
        .filter(|d| {
            r.levels[*d].is_some() || tp.ops().any(|op| matches!(op, ROp::Dice { level: Some(c), .. } if c.mentions_dimension(*d)))
        })
        .count();
    let measures = (0..s.measures.len())
        .filter(|m| r.measures[*m] || tp.ops().any(|op| matches!(op, ROp::Dice { measure: Some(c), .. } if c.mentions_measure(*m))))
        .count();
    2 + dims + measures
}

pub fn named_graph_bound() -> Verdict {
    let cube = ssb::generate_ssb_toy(TOY_DIVISOR, TOY_SEED);
    let s = &cube.schema;
    let (graphs, pfx, stats) = (ssb::ssb_graphs(), ssb_prefixes_table(), LevelStats::from_members(&cube.dimensions));
    let cx = Context { schema: s, graphs: &graphs, prefixes: &pfx, stats: &stats };
    let mut imps = vec![Improvement::Strategies(parse_strategies("S1").map_err(|e| e.to_string())?)];
    imps.extend(ScenarioId::all().map(Improvement::Scenario));
    let paper_bound = 2 + s.dimensions.len() + s.measures.len();
    let (mut checked, mut without_block) = (0, 0);
    for (id, q) in ssb::ssb_queries() {
        let (tp, _) = check(&q, s).map_err(|e| e.to_string())?;
        let want = expected_instance_patterns(&simplify(&tp, s).map_err(|e| e.to_string())?.program, s);
        for imp in &imps {
            let c = compile(&q, &cx, imp).map_err(|e| format!("{id}: {e}"))?;
            let ir = c.final_ir();
            let Some(n) = ir.instance_pattern_count() else {
                ensure(!matches!(imp, Improvement::Strategies(_)), || format!("{id}: S1 left no instance GRAPH block"))?;
                without_block += 1;
                continue;
            };
            // Counted on the rendered text, not the IR.
            let root = parse_sparql(&render(ir))?;
            let block = graph_nodes(&root).into_iter().find(|(g, _)| *g == graphs.instance_graph).ok_or("instance block lost")?.1;
            let parsed = triples(block).len();
            ensure(parsed == n && n == want && n <= paper_bound, || {
                format!("{id} {imp:?}: {parsed} patterns (IR {n}), expected {want}, bound {paper_bound}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} post-S1 queries at exactly 2+|D|+|M| (<= {paper_bound}); {without_block} scenario outputs have no S1"))
}

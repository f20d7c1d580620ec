use cubeql_core::cql::{parse, resolve, ROp};
use cubeql_core::fixtures::*;
use cubeql_core::model::CubeSchema;
use cubeql_core::optimize::*;
use cubeql_core::rdf::Prefixes;
use cubeql_core::simplify::simplify;
use cubeql_core::sparql::{render, translate, Element, Group, STerm, SparqlQueryIr};

const SC: &str = "http://www.fing.edu.uy/cubes/schemas/migr_asyapp#";

fn pfx() -> Prefixes {
    let mut p = Prefixes::new();
    for (k, v) in asylum_prefixes() {
        p.insert(&k, &v);
    }
    p
}

fn schema() -> CubeSchema {
    asylum_cube(false).schema
}

fn naive(q: &str) -> SparqlQueryIr {
    let s = schema();
    let tp = resolve(&parse(q).unwrap(), &s).unwrap();
    let sp = simplify(&tp, &s).unwrap().program;
    translate(&sp, &s, &asylum_graphs(), &pfx()).unwrap()
}

fn scenario(ir: &SparqlQueryIr, n: u8, stats: &LevelStats) -> SparqlQueryIr {
    build_scenario(ir.clone(), ScenarioId::new(n).unwrap(), stats).unwrap()
}

fn schema_block(ir: &SparqlQueryIr) -> Vec<Element> {
    ir.block_for_graph(&ir.schema_graph).unwrap().elements.iter().map(|t| t.element.clone()).collect()
}

/// Dimension groups of the schema block, in order of first appearance.
fn dim_order(ir: &SparqlQueryIr) -> Vec<usize> {
    let mut v = Vec::new();
    for t in &ir.block_for_graph(&ir.schema_graph).unwrap().elements {
        if let Group::Dimension(d) = t.group {
            if !v.contains(&d) {
                v.push(d);
            }
        }
    }
    v
}

fn dim_index(name: &str) -> usize {
    schema().dimensions.iter().position(|d| d.name == name).unwrap()
}

#[test]
fn naive_query_has_single_grouping_shape() {
    let ir = naive(QUERY_ASIA_OVER_5000);
    assert_eq!(ir.group_vars, ["plm1", "plm2", "lm3", "lm4", "lm5", "lm6"]);
    assert_eq!(ir.aggregates.len(), 1);
    assert_eq!(ir.aggregates[0].function.sparql_name(), "SUM");
    assert!(ir.aggregates[0].cast.ends_with("#integer"));
    let text = render(&ir);
    assert!(text.contains("(SUM(xsd:integer(?m1)) AS ?ag1)"), "{text}");
    assert!(
        text.contains(r#"FILTER (?plm11 = "Asia" && (?lm31 = "France" || ?lm31 = "United Kingdom"))"#),
        "{text}"
    );
    assert!(text.contains("FILTER (?ag1 > 5000)"), "{text}");
    assert!(text.contains("GROUP BY ?plm1 ?plm2 ?lm3 ?lm4 ?lm5 ?lm6"));
    // The inner filter precedes the grouping, the aggregate filter follows it.
    assert!(text.find("?plm11 = \"Asia\"").unwrap() < text.find("GROUP BY").unwrap());
    assert!(text.find("GROUP BY").unwrap() < text.find("?ag1 > 5000").unwrap());
}

#[test]
fn translation_is_deterministic() {
    let a = naive(QUERY_ASIA_OVER_5000);
    let b = naive(QUERY_ASIA_OVER_5000);
    assert_eq!(render(&a), render(&b));
    let stats = asylum_level_stats();
    for n in 1..=19 {
        assert_eq!(render(&scenario(&a, n, &stats)), render(&scenario(&b, n, &stats)));
    }
}

#[test]
fn empty_program_groups_all_base_levels() {
    let ir = naive("");
    assert_eq!(ir.group_vars, ["lm1", "lm2", "lm3", "lm4", "lm5", "lm6"]);
    assert!(!ir.uses_subquery());
    assert!(!render(&ir).contains("FILTER"));
}

#[test]
fn redundant_navigation_becomes_one_rollup() {
    let ir = naive(QUERY_REDUNDANT_NAVIGATION);
    assert_eq!(ir.group_vars, ["plm1", "lm3", "lm4", "lm5", "lm6"]);
    assert!(ir.var_levels["plm1"].ends_with("#year"));
}

#[test]
fn es7_moves_patterns_into_graphs() {
    let ir = scenario(&naive(QUERY_ASIA_OVER_5000), 7, &LevelStats::default());
    assert_eq!(ir.blocks.len(), 2);
    assert_eq!(ir.blocks[0].graph.as_deref(), Some(ir.instance_graph.as_str()));
    assert_eq!(ir.blocks[1].graph.as_deref(), Some(ir.schema_graph.as_str()));
    let sch = schema_block(&ir);
    let asia = sch.iter().any(|e| {
        matches!(e, Element::Triple(t) if t.s == STerm::var("plm1")
            && t.p == STerm::iri(&format!("{SC}contName"))
            && matches!(&t.o, STerm::Lit(l) if l.lexical == "Asia"))
    });
    assert!(asia, "{sch:?}");
    let values: Vec<_> = sch
        .iter()
        .filter_map(|e| match e {
            Element::Values { var, values } => Some((var.clone(), values.len())),
            _ => None,
        })
        .collect();
    assert_eq!(values, [("lm31".to_string(), 2)]);
    assert!(!sch.iter().any(|e| matches!(e, Element::Filter(_))));
    // VALUES sits right after the pattern binding its variable.
    let vi = sch.iter().position(|e| matches!(e, Element::Values { .. })).unwrap();
    assert!(matches!(&sch[vi - 1], Element::Triple(t) if t.o == STerm::var("lm31")));
    let text = render(&ir);
    assert!(text.contains("FROM NAMED loc-ins:migr_asyapp_clean"));
    assert!(text.contains(r#"?plm1 sc:contName "Asia" ."#));
    assert!(text.contains(r#"VALUES ?lm31 { "France" "United Kingdom" }"#));
    assert_eq!(ir.outer_filters.len(), 1);
}

#[test]
fn oc2_puts_fixed_then_restricted_then_free() {
    let ir = scenario(&naive(QUERY_ASIA_OVER_5000), 18, &LevelStats::default());
    let cit = dim_index("citDim");
    let dest = dim_index("destDim");
    let time = dim_index("timeDim");
    assert_eq!(dim_order(&ir), [cit, dest, time]);
    // Within a dimension, higher levels first.
    let sch = schema_block(&ir);
    let Element::Triple(first) = &sch[0] else { panic!() };
    assert_eq!(first.p, STerm::iri(&format!("{SC}contName")));
    let Element::Triple(last) = sch.last().unwrap() else { panic!() };
    assert_eq!(last.s, STerm::var("lm2"));
}

#[test]
fn single_dimension_oc2_matches_oc1() {
    let ir = naive(QUERY_REDUNDANT_NAVIGATION);
    let a = apply_strategies(ir.clone(), &parse_strategies("S1,S5=oc1").unwrap(), &LevelStats::default()).unwrap();
    let b = apply_strategies(ir, &parse_strategies("S1,S5=oc2").unwrap(), &LevelStats::default()).unwrap();
    assert_eq!(a.blocks, b.blocks);
}

#[test]
fn union_rewrite_has_one_branch_per_constant() {
    let ir = scenario(&naive(QUERY_ASIA_OVER_5000), 4, &LevelStats::default());
    let unions: Vec<_> = schema_block(&ir)
        .into_iter()
        .filter_map(|e| match e {
            Element::Union(b) => Some(b),
            _ => None,
        })
        .collect();
    assert_eq!(unions.len(), 1);
    assert_eq!(unions[0].len(), 2);
    assert!(unions[0].iter().all(|b| b.len() == 1 && b[0].s == STerm::var("lm3")));
    assert!(!ir.var_dims.is_empty());
    assert!(!render(&ir).contains("?lm31"));
}

#[test]
fn inapplicable_strategies_leave_the_query_alone() {
    let ir = apply_strategy(naive(QUERY_REDUNDANT_NAVIGATION), StrategyId::S1, &LevelStats::default()).unwrap();
    for s in ["S2", "S3", "S4=union", "S4=values"] {
        let out = apply_strategy(ir.clone(), s.parse().unwrap(), &LevelStats::default()).unwrap();
        assert_eq!(out.blocks, ir.blocks);
        assert_eq!(out.notes.len(), 1, "{s}");
        assert!(out.notes[0].starts_with("NOT_APPLICABLE"));
    }
    let raw = naive(QUERY_REDUNDANT_NAVIGATION);
    let out = apply_strategy(raw.clone(), StrategyId::S5(OrderCriterion::Oc1), &LevelStats::default()).unwrap();
    assert_eq!(out.blocks, raw.blocks);
    assert!(out.notes[0].starts_with("NOT_APPLICABLE"));
}

#[test]
fn scenario_is_the_fold_of_its_strategies() {
    let ir = naive(QUERY_ASIA_OVER_5000);
    let stats = asylum_level_stats();
    let es11 = scenario(&ir, 11, &stats);
    let folded = apply_strategies(ir.clone(), &parse_strategies("S1,S2,S4=values,S5=oc1").unwrap(), &stats).unwrap();
    assert_eq!(render(&es11), render(&folded));
    let es1 = scenario(&ir, 1, &stats);
    assert_eq!(render(&es1), render(&apply_strategy(ir, StrategyId::S1, &stats).unwrap()));
}

#[test]
fn reordering_permutes_elements() {
    let ir = apply_strategies(naive(QUERY_ASIA_OVER_5000), &parse_strategies("S1,S2,S4=values").unwrap(), &LevelStats::default())
        .unwrap();
    let key = |ir: &SparqlQueryIr| {
        let mut v: Vec<String> = ir.all_elements().map(|t| format!("{:?}", t.element)).collect();
        v.sort();
        v
    };
    for c in ["S5=oc1", "S5=oc2", "S5=oc3"] {
        let out = apply_strategy(ir.clone(), c.parse().unwrap(), &asylum_level_stats()).unwrap();
        assert_eq!(key(&out), key(&ir), "{c}");
    }
}

/// Dimensions that keep a coordinate: not sliced away, or diced before a Slice.
fn coordinate_dims(q: &str) -> usize {
    let s = schema();
    let tp = simplify(&resolve(&parse(q).unwrap(), &s).unwrap(), &s).unwrap().program;
    let result = tp.result();
    (0..s.dimensions.len())
        .filter(|d| {
            result.levels[*d].is_some()
                || tp.ops().any(|op| matches!(op, ROp::Dice { level: Some(c), .. } if c.mentions_dimension(*d)))
        })
        .count()
}

#[test]
fn instance_block_has_one_pattern_per_coordinate_and_measure() {
    let s = schema();
    for q in [QUERY_ASIA_OVER_5000, QUERY_AFRICA_CITIZENS, QUERY_REDUNDANT_NAVIGATION, ""] {
        let ir = scenario(&naive(q), 1, &LevelStats::default());
        let n = ir.instance_pattern_count().unwrap();
        assert_eq!(n, 2 + coordinate_dims(q) + ir.aggregates.len(), "{q}");
        assert!(n <= 2 + s.dimensions.len() + s.measures.len());
    }
    assert_eq!(coordinate_dims(QUERY_AFRICA_CITIZENS), 5);
    assert_eq!(coordinate_dims(QUERY_REDUNDANT_NAVIGATION), 5);
}

const TWO_FIXED: &str = r#"
$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent);
$C2:=ROLLUP($C1, destinationDim, destGovernmentType);
$C3:=ROLLUP($C2, timeDim, year);
$C4:=DICE($C3, (citizenshipDim|continent|contName = "Asia"));
$C5:=DICE($C4, (destinationDim|destGovernmentType|govName = "Republic"));
$C6:=DICE($C5, (timeDim|year|yearNum > 2012));
"#;

fn two_fixed_stats(cont: u64, gov: u64) -> LevelStats {
    let mut st = LevelStats::default();
    st.insert(format!("{SC}continent"), cont);
    st.insert(format!("{SC}destGovernmentType"), gov);
    st.insert(format!("{SC}year"), 3);
    st
}

/// Every permutation of the dimension groups, keeping the lexicographically
/// smallest key sequence; ties keep the earlier original position.
fn brute_force(keys: &[(u8, i64, usize)]) -> Vec<usize> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    perms(keys.len())
        .into_iter()
        .filter(|p| p.windows(2).all(|w| keys[w[0]] <= keys[w[1]]))
        .min()
        .unwrap()
}

#[test]
fn oc3_breaks_ties_by_member_count() {
    let ir = apply_strategies(naive(TWO_FIXED), &parse_strategies("S1,S2").unwrap(), &LevelStats::default()).unwrap();
    let base = dim_order(&ir);
    let cit = dim_index("citDim");
    let dest = dim_index("destDim");
    let time = dim_index("timeDim");
    for (cont, gov) in [(5, 7), (7, 5), (6, 6)] {
        let st = two_fixed_stats(cont, gov);
        let out = reorder(ir.clone(), OrderCriterion::Oc3, &st).unwrap();
        // Fixed before restricted, larger top level first among equals.
        let keys: Vec<(u8, i64, usize)> = base
            .iter()
            .enumerate()
            .map(|(pos, d)| {
                let (class, count) = if *d == cit {
                    (0, cont)
                } else if *d == dest {
                    (0, gov)
                } else {
                    (1, 3)
                };
                (class, -(count as i64), pos)
            })
            .collect();
        let expected: Vec<usize> = brute_force(&keys).into_iter().map(|i| base[i]).collect();
        assert_eq!(dim_order(&out), expected, "{cont} vs {gov}");
        assert_eq!(*dim_order(&out).last().unwrap(), time);
    }
    assert_eq!(dim_order(&reorder(ir.clone(), OrderCriterion::Oc3, &two_fixed_stats(5, 7)).unwrap())[0], dest);
    let err = reorder(ir, OrderCriterion::Oc3, &LevelStats::default()).unwrap_err();
    assert_eq!(err.code(), "MISSING_STATS");
}

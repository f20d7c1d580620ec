use cubeql_core::cql::{parse, resolve};
use cubeql_core::fixtures::*;
use cubeql_core::instance::CubeInstance;
use cubeql_core::model::AggregateFunction;
use cubeql_core::oracle::eval;
use cubeql_core::simplify::simplify;
use cubeql_core::ssb::{generate_ssb_toy, ssb_queries, ssb_schema, ssb_toy_spec};
use cubeql_core::table::{ResultTable, Value, DEFAULT_TOLERANCE};
use cubeql_core::toy::generate_toy_cube;
use std::collections::BTreeMap;

const GEO: &str = "http://eurostat.linked-statistics.org/dic/geo#";

fn run(q: &str, cube: &CubeInstance) -> ResultTable {
    let tp = resolve(&parse(q).unwrap(), &cube.schema).unwrap();
    eval(&tp, cube).unwrap()
}

/// Value of the only aggregate column in the row whose member cells include `member`.
fn value_for(t: &ResultTable, member: &str) -> f64 {
    let rows: Vec<_> = t.rows.iter().filter(|r| r.contains(&Value::Iri(member.to_string()))).collect();
    assert_eq!(rows.len(), 1, "{member} in {t:?}");
    rows[0].iter().find_map(Value::as_f64).unwrap()
}

#[test]
fn slicing_sex_adds_the_two_german_rows() {
    let cube = asylum_cube(false);
    let t = run("$C1:=SLICE(migr_asyapp, sexDim);", &cube);
    assert_eq!(t.len(), 2);
    assert_eq!(value_for(&t, &format!("{GEO}DE")), 425.0 + 1680.0);
    assert_eq!(value_for(&t, &format!("{GEO}FR")), 95.0);
}

#[test]
fn avg_is_taken_over_base_cells() {
    let mut cube = asylum_cube(false);
    cube.schema.measures[0].aggregate = AggregateFunction::Avg;
    let t = run("$C1:=SLICE(migr_asyapp, sexDim);", &cube);
    assert_eq!(value_for(&t, &format!("{GEO}DE")), (425.0 + 1680.0) / 2.0);
}

#[test]
fn empty_program_returns_the_base_cells() {
    let cube = asylum_cube(false);
    let t = eval(&resolve(&parse("").unwrap(), &cube.schema).unwrap(), &cube).unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(t.columns.len(), 7);
    let mut vals: Vec<f64> = t.rows.iter().map(|r| r[6].as_f64().unwrap()).collect();
    vals.sort_by(f64::total_cmp);
    assert_eq!(vals, [95.0, 425.0, 1680.0]);
}

#[test]
fn grand_total_conserves_the_sum() {
    let cube = asylum_cube(true);
    let all = "$C1:=SLICE(migr_asyapp, citizenshipDim);
               $C2:=SLICE($C1, destinationDim);
               $C3:=SLICE($C2, timeDim);
               $C4:=SLICE($C3, sexDim);
               $C5:=SLICE($C4, ageDim);
               $C6:=SLICE($C5, asylappDim);";
    let t = run(all, &cube);
    let base: f64 = cube.observations.rows.iter().map(|o| o.measures[0]).sum();
    assert_eq!(t.rows, vec![vec![Value::Number(base)]]);
    // An intermediate cuboid sums to the same total.
    let mid = run("$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent);", &cube);
    let s: f64 = mid.rows.iter().map(|r| r.last().unwrap().as_f64().unwrap()).sum();
    assert_eq!(s, base);
}

#[test]
fn rollup_order_does_not_matter() {
    let cube = asylum_cube(true);
    let a = run("$C1:=ROLLUP(migr_asyapp, timeDim, year); $C2:=ROLLUP($C1, citizenshipDim, continent);", &cube);
    let b = run("$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent); $C2:=ROLLUP($C1, timeDim, year);", &cube);
    a.compare(&b, 0.0).unwrap();
}

/// Avg per (year, destination) computed straight from the observations.
#[test]
fn avg_matches_brute_force_grouping() {
    let mut cube = asylum_cube(true);
    cube.schema.measures[0].aggregate = AggregateFunction::Avg;
    let q = "$C1:=ROLLUP(migr_asyapp, timeDim, year);
             $C2:=SLICE($C1, citizenshipDim); $C3:=SLICE($C2, sexDim);
             $C4:=SLICE($C3, ageDim); $C5:=SLICE($C4, asylappDim);";
    let t = run(q, &cube);
    let (ti, gi) = (cube.schema.dimension_index("timeDim").unwrap(), cube.schema.dimension_index("destDim").unwrap());
    let in_year = "http://www.fing.edu.uy/cubes/schemas/migr_asyapp#inYear";
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for o in &cube.observations.rows {
        let y = cube.dimensions.parent(&o.coordinates[ti], in_year).unwrap().to_string();
        groups.entry((y, o.coordinates[gi].clone())).or_default().push(o.measures[0]);
    }
    assert_eq!(t.len(), groups.len());
    let (yc, dc) = (t.column("timeDim.year").unwrap(), t.column("destDim.geo").unwrap());
    let vc = t.column("obsValue").unwrap();
    for r in &t.rows {
        let (Value::Iri(y), Value::Iri(d)) = (&r[yc], &r[dc]) else { panic!("{r:?}") };
        let vs = &groups[&(y.clone(), d.clone())];
        let avg = vs.iter().sum::<f64>() / vs.len() as f64;
        assert!((r[vc].as_f64().unwrap() - avg).abs() < 1e-9);
    }
}

#[test]
fn level_dice_keeps_matching_cells_only() {
    let cube = asylum_cube(true);
    let t = run(
        "$C1:=DICE(migr_asyapp, (destinationDim|geo|counName = \"France\"));
         $C2:=SLICE($C1, citizenshipDim); $C3:=SLICE($C2, timeDim); $C4:=SLICE($C3, sexDim);
         $C5:=SLICE($C4, ageDim); $C6:=SLICE($C5, asylappDim);",
        &cube,
    );
    let gi = cube.schema.dimension_index("destDim").unwrap();
    let fr: f64 = cube.observations.rows.iter().filter(|o| o.coordinates[gi] == format!("{GEO}FR")).map(|o| o.measures[0]).sum();
    assert_eq!(t.rows, vec![vec![Value::Iri(format!("{GEO}FR")), Value::Number(fr)]]);
}

#[test]
fn measure_dice_filters_groups() {
    let cube = asylum_cube(true);
    let base = run("$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent);", &cube);
    let cut = run("$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent); $C2:=DICE($C1, obsValue > 1000);", &cube);
    let big = base.rows.iter().filter(|r| r.last().unwrap().as_f64().unwrap() > 1000.0).count();
    assert_eq!(cut.len(), big);
    assert!(big < base.len());
}

#[test]
fn missing_parent_is_reported() {
    let mut cube = asylum_cube(false);
    let in_year = "http://www.fing.edu.uy/cubes/schemas/migr_asyapp#inYear";
    cube.dimensions.rollups.retain(|(_, r), _| r != in_year);
    let tp = resolve(&parse("$C1:=ROLLUP(migr_asyapp, timeDim, year);").unwrap(), &cube.schema).unwrap();
    assert_eq!(eval(&tp, &cube).unwrap_err().code(), "MISSING_RUP");
}

#[test]
fn not_well_formed_programs_are_refused() {
    let cube = asylum_cube(true);
    let tp = resolve(&parse(QUERY_DICE_BETWEEN_NAVIGATION).unwrap(), &cube.schema).unwrap();
    assert_eq!(eval(&tp, &cube).unwrap_err().code(), "NOT_WELL_FORMED");
}

#[test]
fn simplification_keeps_fixture_results() {
    let cube = asylum_cube(true);
    for q in [QUERY_AFRICA_CITIZENS, QUERY_REDUNDANT_NAVIGATION, QUERY_ASIA_OVER_5000] {
        let tp = resolve(&parse(q).unwrap(), &cube.schema).unwrap();
        let sp = simplify(&tp, &cube.schema).unwrap().program;
        eval(&tp, &cube).unwrap().compare(&eval(&sp, &cube).unwrap(), DEFAULT_TOLERANCE).unwrap();
    }
}

#[test]
fn toy_cubes_are_reproducible() {
    let a = generate_ssb_toy(10_000, 42);
    let b = generate_ssb_toy(10_000, 42);
    assert_eq!(a.observations.rows, b.observations.rows);
    assert_eq!(a.dimensions, b.dimensions);
    let c = generate_ssb_toy(10_000, 43);
    assert_ne!(a.observations.rows, c.observations.rows);
    assert_eq!(a.observations.rows.len(), 600);
}

#[test]
fn toy_hierarchies_are_complete() {
    let spec = ssb_toy_spec(10_000);
    let cube = generate_toy_cube(&ssb_schema(), &spec, 7);
    for d in &cube.schema.dimensions {
        for h in &d.hierarchies {
            for st in &h.steps {
                let Some(r) = &st.rollup else { continue };
                let child = &d.level(&st.child).unwrap().iri;
                let parent = &d.level(&st.parent).unwrap().iri;
                let parents = cube.dimensions.members_of(parent);
                for m in cube.dimensions.members_of(child) {
                    let p = cube.dimensions.parent(m, r).unwrap_or_else(|| panic!("{m} via {r}"));
                    assert!(parents.iter().any(|x| x == p));
                }
                // Balanced assignment uses every parent.
                let used: std::collections::HashSet<_> =
                    cube.dimensions.members_of(child).iter().map(|m| cube.dimensions.parent(m, r).unwrap()).collect();
                assert_eq!(used.len(), parents.len().min(cube.dimensions.members_of(child).len()));
            }
        }
    }
}

#[test]
fn ssb_workload_runs_on_the_toy_cube() {
    let cube = generate_ssb_toy(10_000, 42);
    let mut nonempty = 0;
    for (name, q) in ssb_queries() {
        let t = run(&q, &cube);
        if !t.is_empty() {
            nonempty += 1;
        }
        let tp = resolve(&parse(&q).unwrap(), &cube.schema).unwrap();
        let sp = simplify(&tp, &cube.schema).unwrap().program;
        t.compare(&eval(&sp, &cube).unwrap(), DEFAULT_TOLERANCE).unwrap_or_else(|e| panic!("{name}: {e:?}"));
    }
    assert!(nonempty >= 10, "only {nonempty} queries return rows");
}

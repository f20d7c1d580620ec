use cubeql_core::cql::{check_well_formed, parse, resolve, CqlError, Op, PatternClass, ROp, WfCondition};
use cubeql_core::fixtures::*;
use cubeql_core::model::CubeSchema;

fn schema() -> CubeSchema {
    asylum_cube(false).schema
}

fn kinds(src: &str) -> Vec<&'static str> {
    parse(src).unwrap().statements.iter().map(|s| s.op.keyword()).collect()
}

#[test]
fn parses_seven_statement_program() {
    assert_eq!(kinds(QUERY_AFRICA_CITIZENS), ["ROLLUP", "ROLLUP", "DICE", "DICE", "DRILLDOWN", "SLICE", "SLICE"]);
    assert_eq!(kinds("$C1:=ROLLUP(migr_asyapp, timeDim, year);"), ["ROLLUP"]);
}

#[test]
fn level_set_after_two_rollups() {
    let s = schema();
    let tp = resolve(&parse(QUERY_AFRICA_CITIZENS).unwrap(), &s).unwrap();
    let ls = tp.statements[1].after.level_set(&s);
    assert_eq!(ls.levels["citDim"], "continent");
    assert_eq!(ls.levels["timeDim"], "year");
    assert_eq!(ls.levels["destDim"], "geo");
    assert_eq!(tp.class, PatternClass::P2);
    let r = check_well_formed(&tp);
    assert!(r.well_formed(), "{r:?}");
    // Two Slices remove two entries.
    assert_eq!(tp.result().level_set(&s).levels.len(), 4);
}

#[test]
fn level_outside_dimension_is_unknown() {
    let src = "$C1:=DICE(migr_asyapp, destinationDim|year|counName = \"France\");";
    let e = resolve(&parse(src).unwrap(), &schema()).unwrap_err();
    assert_eq!(e.code(), "UNKNOWN_NAME");
}

#[test]
fn govtype_is_not_above_continent() {
    let src = "$C1:=ROLLUP(migr_asyapp, citizenshipDim, continent);\n$C2:=ROLLUP($C1, citizenshipDim, govType);";
    let e = resolve(&parse(src).unwrap(), &schema()).unwrap_err();
    assert_eq!(e.code(), "NO_PATH");
    assert_eq!(e.statement(), Some(1));
}

#[test]
fn measure_dice_between_navigations() {
    let tp = resolve(&parse(QUERY_DICE_BETWEEN_NAVIGATION).unwrap(), &schema()).unwrap();
    let r = check_well_formed(&tp);
    assert_eq!(r.class, PatternClass::Invalid);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].condition, WfCondition::MeasureDiceBeforeNavigation);
    assert_eq!(r.violations[0].statement + 1, 2);
}

#[test]
fn empty_program_is_p1() {
    let tp = resolve(&parse("").unwrap(), &schema()).unwrap();
    assert_eq!(check_well_formed(&tp).class, PatternClass::P1);
    assert!(check_well_formed(&tp).well_formed());
}

#[test]
fn measure_threshold_splits_at_and() {
    let tp = resolve(&parse(QUERY_ASIA_OVER_5000).unwrap(), &schema()).unwrap();
    assert_eq!(tp.class, PatternClass::P3);
    let ROp::Dice { level, measure, .. } = &tp.statements[3].op else { panic!() };
    assert!(level.is_some() && measure.is_some());
}

#[test]
fn disjunction_across_scopes_is_rejected() {
    let src = "$C1:=DICE(migr_asyapp, obsValue > 5000 AND destinationDim|country|counName = \"France\" OR destinationDim|country|counName = \"United Kingdom\");";
    let e = resolve(&parse(src).unwrap(), &schema()).unwrap_err();
    assert_eq!(e.code(), "MIXED_DICE_SCOPE");
}

#[test]
fn sliced_dimension_cannot_be_used() {
    let src = "$C1:=SLICE(migr_asyapp, timeDim);\n$C2:=ROLLUP($C1, timeDim, year);";
    assert_eq!(resolve(&parse(src).unwrap(), &schema()).unwrap_err().code(), "SLICED_REFERENCE");
    let src = "$C1:=SLICE(migr_asyapp, obsValue);\n$C2:=DICE($C1, obsValue > 3);";
    assert_eq!(resolve(&parse(src).unwrap(), &schema()).unwrap_err().code(), "SLICED_REFERENCE");
}

#[test]
fn type_mismatches() {
    let s = schema();
    for src in [
        "$C1:=DICE(migr_asyapp, destinationDim|country|counName > 3);",
        "$C1:=DICE(migr_asyapp, obsValue = \"many\");",
        "$C1:=DICE(migr_asyapp, 1 = 1);",
    ] {
        assert_eq!(resolve(&parse(src).unwrap(), &s).unwrap_err().code(), "TYPE_MISMATCH", "{src}");
    }
}

#[test]
fn dice_must_use_current_level() {
    let src = "$C1:=DICE(migr_asyapp, timeDim|year|yearNum = 2014);";
    assert_eq!(resolve(&parse(src).unwrap(), &schema()).unwrap_err().code(), "UNKNOWN_LEVEL_IN_CONTEXT");
}

#[test]
fn chaining_is_checked() {
    let src = "$C1:=SLICE(migr_asyapp, sexDim);\n$C2:=SLICE($C9, ageDim);";
    assert!(matches!(resolve(&parse(src).unwrap(), &schema()), Err(CqlError::InputMismatch { statement: 1, .. })));
    let src = "$C1:=SLICE(nocube, sexDim);";
    assert_eq!(resolve(&parse(src).unwrap(), &schema()).unwrap_err().code(), "UNKNOWN_NAME");
}

#[test]
fn drilldown_to_unvisited_lower_level() {
    let s = schema();
    let src = "$C1:=ROLLUP(migr_asyapp, citizenshipDim, All);\n$C2:=DRILLDOWN($C1, citizenshipDim, govType);";
    let tp = resolve(&parse(src).unwrap(), &s).unwrap();
    let ROp::DrillDown { to, .. } = &tp.statements[1].op else { panic!() };
    assert_eq!(to.level, "governmentType");
    assert_eq!(to.path.len(), 1);
    // Drilling below the bottom level is impossible.
    let src = "$C1:=DRILLDOWN(migr_asyapp, timeDim, year);";
    assert_eq!(resolve(&parse(src).unwrap(), &s).unwrap_err().code(), "NO_PATH");
}

#[test]
fn repeated_slice_and_orphan_drilldown() {
    let s = schema();
    let src = "$C1:=SLICE(migr_asyapp, sexDim);\n$C2:=SLICE($C1, sexDim);";
    let r = check_well_formed(&resolve(&parse(src).unwrap(), &s).unwrap());
    assert_eq!(r.violations[0].condition, WfCondition::RepeatedSlice);
    assert_eq!(r.violations[0].statement, 1);
    let src = "$C1:=DRILLDOWN(migr_asyapp, timeDim, month);";
    let r = check_well_formed(&resolve(&parse(src).unwrap(), &s).unwrap());
    assert_eq!(r.violations[0].condition, WfCondition::DrillDownWithoutRollUp);
    assert_eq!(r.class, PatternClass::Invalid);
}

#[test]
fn printer_round_trips_fixtures() {
    for src in [QUERY_AFRICA_CITIZENS, QUERY_DICE_BETWEEN_NAVIGATION, QUERY_REDUNDANT_NAVIGATION, QUERY_ASIA_OVER_5000] {
        let p = parse(src).unwrap();
        assert_eq!(parse(&p.to_string()).unwrap(), p);
        assert!(p.statements.iter().all(|s| !matches!(&s.op, Op::Slice { target } if target.is_empty())));
    }
}

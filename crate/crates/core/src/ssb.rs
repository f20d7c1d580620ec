//! A desk-scale cube shaped like the Star Schema Benchmark line-order cube,
//! and a 13-query workload in four flights.

use crate::config::GraphConfig;
use crate::instance::CubeInstance;
use crate::model::{AggregateFunction, CubeSchema, DimensionSchema, HierarchySpec, HierarchyStep, Level, Measure, MeasureDomain, ValueDomain};
use crate::toy::{generate_toy_cube, ToySpec};
use std::collections::BTreeMap;

pub const RDFH: &str = "http://lod2.eu/schemas/rdfh#";
pub const SCH: &str = "http://www.fing.edu.uy/inco/cubes/schemas/ssb_qb4olap#";
pub const INST: &str = "http://www.fing.edu.uy/inco/cubes/instances/ssb#";
pub const SCHEMA_GRAPH: &str = "http://www.fing.edu.uy/inco/cubes/schemas/ssb_qb4olap";
pub const INSTANCE_GRAPH: &str = "http://www.fing.edu.uy/inco/cubes/instances/ssb_qb4olap";
pub const DATASET: &str = "http://www.fing.edu.uy/inco/cubes/instances/ssb#lineorder";

/// Member counts at full scale, keyed by level name.
pub const FULL_SCALE_MEMBERS: [(&str, usize); 16] = [
    ("lo_orderdate", 2556),
    ("week", 371),
    ("month", 84),
    ("year", 7),
    ("lo_partkey", 2_000_000),
    ("brand", 1000),
    ("category", 25),
    ("manufacturer", 5),
    ("lo_custkey", 30_000),
    ("customerCity", 250),
    ("customerNation", 25),
    ("customerRegion", 5),
    ("lo_suppkey", 2000),
    ("supplierCity", 250),
    ("supplierNation", 25),
    ("supplierRegion", 5),
];

pub const FULL_SCALE_LINEORDERS: usize = 6_000_000;

/// Smallest size any level is shrunk to, unless it is smaller to begin with.
pub const MIN_LEVEL_SIZE: usize = 25;

/// Scaled member count: the full count divided by `divisor` and rounded up,
/// but never below `min(count, MIN_LEVEL_SIZE)`.
pub fn scaled_size(count: usize, divisor: usize) -> usize {
    count.div_ceil(divisor.max(1)).max(count.min(MIN_LEVEL_SIZE))
}

fn level(ns: &str, name: &str) -> Level {
    Level::new(format!("{ns}{name}"), name)
}

fn step(child: &str, parent: &str, rollup: &str) -> HierarchyStep {
    HierarchyStep::new(child, parent, &format!("{SCH}{rollup}"))
}

fn hierarchy(name: &str, steps: Vec<HierarchyStep>) -> HierarchySpec {
    HierarchySpec { iri: format!("{SCH}{name}"), name: name.to_string(), steps }
}

fn geography(dim: &str, bottom: &str, prefix: &str, person_attr: &str) -> DimensionSchema {
    let city = format!("{prefix}City");
    let nation = format!("{prefix}Nation");
    let region = format!("{prefix}Region");
    DimensionSchema::build(
        &format!("{SCH}{dim}"),
        dim,
        vec![
            level(RDFH, bottom).with_aliases(&[prefix]).with_attribute(format!("{SCH}{person_attr}"), person_attr, ValueDomain::String),
            level(SCH, &city).with_aliases(&["city"]).with_attribute(format!("{SCH}cityName"), "cityName", ValueDomain::String),
            level(SCH, &nation).with_aliases(&["nation"]).with_attribute(format!("{SCH}nationName"), "nationName", ValueDomain::String),
            level(SCH, &region).with_aliases(&["region"]).with_attribute(format!("{SCH}regionName"), "regionName", ValueDomain::String),
        ],
        vec![hierarchy(
            &format!("{prefix}Geography"),
            vec![
                step(bottom, &city, &format!("{prefix}InCity")),
                step(&city, &nation, &format!("{prefix}InNation")),
                step(&nation, &region, &format!("{prefix}InRegion")),
            ],
        )],
    )
}

pub fn ssb_schema() -> CubeSchema {
    let date = DimensionSchema::build(
        &format!("{SCH}dateDim"),
        "dateDim",
        vec![
            level(RDFH, "lo_orderdate").with_aliases(&["date", "day"]).with_attribute(format!("{SCH}dateValue"), "dateValue", ValueDomain::Date),
            level(SCH, "week").with_attribute(format!("{SCH}weekNum"), "weekNum", ValueDomain::Integer),
            level(SCH, "month")
                .with_attribute(format!("{SCH}monthNum"), "monthNum", ValueDomain::Integer)
                .with_attribute(format!("{SCH}monthName"), "monthName", ValueDomain::String),
            level(SCH, "year").with_attribute(format!("{SCH}yearNum"), "yearNum", ValueDomain::Integer),
        ],
        vec![
            hierarchy("calendar", vec![step("lo_orderdate", "month", "dateInMonth"), step("month", "year", "monthInYear")]),
            hierarchy("weekly", vec![step("lo_orderdate", "week", "dateInWeek")]),
        ],
    )
    .with_aliases(&["time", "timeDim"]);
    let part = DimensionSchema::build(
        &format!("{SCH}partDim"),
        "partDim",
        vec![
            level(RDFH, "lo_partkey").with_aliases(&["part"]).with_attribute(format!("{SCH}partName"), "partName", ValueDomain::String),
            level(SCH, "brand").with_attribute(format!("{SCH}brandName"), "brandName", ValueDomain::String),
            level(SCH, "category").with_attribute(format!("{SCH}categoryName"), "categoryName", ValueDomain::String),
            level(SCH, "manufacturer").with_aliases(&["mfgr"]).with_attribute(format!("{SCH}mfgrName"), "mfgrName", ValueDomain::String),
        ],
        vec![hierarchy(
            "productLine",
            vec![
                step("lo_partkey", "brand", "partInBrand"),
                step("brand", "category", "brandInCategory"),
                step("category", "manufacturer", "categoryInMfgr"),
            ],
        )],
    );
    let customer = geography("customerDim", "lo_custkey", "customer", "customerName");
    let supplier = geography("supplierDim", "lo_suppkey", "supplier", "supplierName");
    let m = |name: &str, agg| Measure::new(&format!("{RDFH}{name}"), name, MeasureDomain::Integer, agg);
    CubeSchema {
        iri: format!("{SCH}ssb_qb4olap"),
        name: "ssb_qb4olap".into(),
        aliases: vec!["lineorder".into()],
        dimensions: vec![date, part, customer, supplier],
        measures: vec![
            m("lo_quantity", AggregateFunction::Sum),
            m("lo_discount", AggregateFunction::Avg),
            m("lo_extendedprice", AggregateFunction::Max),
            m("lo_revenue", AggregateFunction::Sum),
            m("lo_supplycost", AggregateFunction::Min),
        ],
    }
}

pub fn ssb_graphs() -> GraphConfig {
    GraphConfig::new(SCHEMA_GRAPH, INSTANCE_GRAPH, DATASET).expect("distinct graphs")
}

pub fn ssb_prefixes() -> BTreeMap<String, String> {
    [("rdfh", RDFH), ("schema", SCH), ("inst", INST)].into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Generator settings for the cube shrunk by `divisor`.
pub fn ssb_toy_spec(divisor: usize) -> ToySpec {
    let schema = ssb_schema();
    let mut spec = ToySpec::new(INST, DATASET);
    for d in &schema.dimensions {
        for l in &d.levels {
            if let Some((_, n)) = FULL_SCALE_MEMBERS.iter().find(|(name, _)| *name == l.name) {
                spec.sizes.insert(l.iri.clone(), scaled_size(*n, divisor));
            }
        }
    }
    spec.observations = FULL_SCALE_LINEORDERS.div_ceil(divisor.max(1));
    for (name, range) in [
        ("lo_quantity", (1, 50)),
        ("lo_discount", (0, 10)),
        ("lo_extendedprice", (900, 104_950)),
        ("lo_revenue", (810, 104_950)),
        ("lo_supplycost", (540, 1_200)),
    ] {
        spec.measure_ranges.insert(format!("{RDFH}{name}"), range);
    }
    spec.integer_base.insert(format!("{SCH}yearNum"), 1992);
    spec
}

pub fn generate_ssb_toy(divisor: usize, seed: u64) -> CubeInstance {
    generate_toy_cube(&ssb_schema(), &ssb_toy_spec(divisor), seed)
}

/// Slices every measure except the listed ones.
fn keep_measures(keep: &[&str]) -> String {
    let all = ["lo_quantity", "lo_discount", "lo_extendedprice", "lo_revenue", "lo_supplycost"];
    all.iter().filter(|m| !keep.contains(m)).map(|m| format!("SLICE(_, {m});\n")).collect()
}

/// Turns `OP(_, ...);` statements into a chain `$C1 ... $Cn` starting at
/// `lineorder`.
fn chain(body: &str) -> String {
    let mut out = String::new();
    let mut n = 0;
    for stmt in body.split(';').map(str::trim).filter(|l| !l.is_empty()) {
        let input = if n == 0 { "lineorder".to_string() } else { format!("$C{n}") };
        n += 1;
        out.push_str(&format!("$C{n}:={};\n", stmt.replacen("(_", &format!("({input}"), 1)));
    }
    out
}

/// The 13-query workload: one restricted dimension in Q1-Q3, two in Q4-Q6,
/// three in Q7-Q10 and four in Q11-Q13.
pub fn ssb_queries() -> Vec<(String, String)> {
    let rev = keep_measures(&["lo_revenue"]);
    let profit = keep_measures(&["lo_revenue", "lo_supplycost"]);
    let bodies = [
        // Flight 1: one year, month or week.
        format!(
            "ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum = 1993));
             SLICE(_, partDim); SLICE(_, customerDim); SLICE(_, supplierDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, dateDim, month);
             DICE(_, (dateDim|month|monthNum = 3));
             SLICE(_, partDim); SLICE(_, customerDim); SLICE(_, supplierDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, dateDim, week);
             DICE(_, (dateDim|week|weekNum >= 6 AND dateDim|week|weekNum <= 9));
             SLICE(_, partDim); SLICE(_, customerDim); SLICE(_, supplierDim);
             {rev}"
        ),
        // Flight 2: a product class and a supplier region, by year and brand.
        format!(
            "ROLLUP(_, partDim, category);
             DICE(_, (partDim|category|categoryName = \"category-012\"));
             DRILLDOWN(_, partDim, brand);
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-002\"));
             ROLLUP(_, dateDim, year);
             SLICE(_, supplierDim); SLICE(_, customerDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, partDim, brand);
             DICE(_, (partDim|brand|brandName >= \"brand-005\" AND partDim|brand|brandName <= \"brand-012\"));
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-003\"));
             ROLLUP(_, dateDim, year);
             SLICE(_, supplierDim); SLICE(_, customerDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, partDim, brand);
             DICE(_, (partDim|brand|brandName = \"brand-007\"));
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-004\"));
             ROLLUP(_, dateDim, year);
             SLICE(_, supplierDim); SLICE(_, customerDim);
             {rev}"
        ),
        // Flight 3: customer, supplier and period, by nation or city and year.
        format!(
            "ROLLUP(_, customerDim, customerRegion);
             DICE(_, (customerDim|customerRegion|regionName = \"customerRegion-003\"));
             DRILLDOWN(_, customerDim, customerNation);
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-003\"));
             DRILLDOWN(_, supplierDim, supplierNation);
             ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum >= 1992 AND dateDim|year|yearNum <= 1997));
             SLICE(_, partDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, customerDim, customerNation);
             DICE(_, (customerDim|customerNation|nationName = \"customerNation-005\"));
             DRILLDOWN(_, customerDim, customerCity);
             ROLLUP(_, supplierDim, supplierNation);
             DICE(_, (supplierDim|supplierNation|nationName = \"supplierNation-005\"));
             DRILLDOWN(_, supplierDim, supplierCity);
             ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum >= 1992 AND dateDim|year|yearNum <= 1997));
             SLICE(_, partDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, customerDim, customerCity);
             DICE(_, (customerDim|customerCity|cityName = \"customerCity-003\" OR customerDim|customerCity|cityName = \"customerCity-007\"));
             ROLLUP(_, supplierDim, supplierCity);
             DICE(_, (supplierDim|supplierCity|cityName = \"supplierCity-003\" OR supplierDim|supplierCity|cityName = \"supplierCity-007\"));
             ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum >= 1992 AND dateDim|year|yearNum <= 1997));
             SLICE(_, partDim);
             {rev}"
        ),
        format!(
            "ROLLUP(_, customerDim, customerCity);
             DICE(_, (customerDim|customerCity|cityName = \"customerCity-011\" OR customerDim|customerCity|cityName = \"customerCity-019\"));
             ROLLUP(_, supplierDim, supplierCity);
             DICE(_, (supplierDim|supplierCity|cityName = \"supplierCity-011\" OR supplierDim|supplierCity|cityName = \"supplierCity-019\"));
             ROLLUP(_, dateDim, month);
             DICE(_, (dateDim|month|monthNum = 12));
             ROLLUP(_, dateDim, year);
             SLICE(_, partDim);
             {rev}"
        ),
        // Flight 4: customer and supplier regions, manufacturers, years.
        format!(
            "ROLLUP(_, customerDim, customerRegion);
             DICE(_, (customerDim|customerRegion|regionName = \"customerRegion-002\"));
             DRILLDOWN(_, customerDim, customerNation);
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-002\"));
             ROLLUP(_, partDim, manufacturer);
             DICE(_, (partDim|manufacturer|mfgrName = \"manufacturer-001\" OR partDim|manufacturer|mfgrName = \"manufacturer-002\"));
             ROLLUP(_, dateDim, year);
             SLICE(_, supplierDim); SLICE(_, partDim);
             {profit}"
        ),
        format!(
            "ROLLUP(_, customerDim, customerRegion);
             DICE(_, (customerDim|customerRegion|regionName = \"customerRegion-002\"));
             ROLLUP(_, supplierDim, supplierRegion);
             DICE(_, (supplierDim|supplierRegion|regionName = \"supplierRegion-002\"));
             DRILLDOWN(_, supplierDim, supplierNation);
             ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum = 1997 OR dateDim|year|yearNum = 1998));
             ROLLUP(_, partDim, manufacturer);
             DICE(_, (partDim|manufacturer|mfgrName = \"manufacturer-001\" OR partDim|manufacturer|mfgrName = \"manufacturer-002\"));
             DRILLDOWN(_, partDim, category);
             SLICE(_, customerDim);
             {profit}"
        ),
        format!(
            "ROLLUP(_, customerDim, customerRegion);
             DICE(_, (customerDim|customerRegion|regionName = \"customerRegion-002\"));
             ROLLUP(_, supplierDim, supplierNation);
             DICE(_, (supplierDim|supplierNation|nationName = \"supplierNation-004\"));
             DRILLDOWN(_, supplierDim, supplierCity);
             ROLLUP(_, dateDim, year);
             DICE(_, (dateDim|year|yearNum = 1997 OR dateDim|year|yearNum = 1998));
             ROLLUP(_, partDim, category);
             DICE(_, (partDim|category|categoryName = \"category-014\"));
             DRILLDOWN(_, partDim, brand);
             SLICE(_, customerDim);
             {profit}"
        ),
    ];
    bodies.iter().enumerate().map(|(i, b)| (format!("Q{}", i + 1), chain(b))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cql::{check_well_formed, parse, resolve};

    #[test]
    fn scaled_sizes_keep_small_levels_whole() {
        assert_eq!(scaled_size(7, 10_000), 7);
        assert_eq!(scaled_size(2_000_000, 10_000), 200);
        assert_eq!(scaled_size(30_000, 10_000), 25);
        assert_eq!(scaled_size(371, 1), 371);
    }

    #[test]
    fn schema_is_valid() {
        let s = ssb_schema();
        let errs: Vec<_> = s.validate().into_iter().filter(|v| v.severity == crate::model::Severity::Error).collect();
        assert!(errs.is_empty(), "{errs:?}");
    }

    #[test]
    fn every_query_is_well_formed() {
        let s = ssb_schema();
        let qs = ssb_queries();
        assert_eq!(qs.len(), 13);
        for (name, text) in qs {
            let p = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            let t = resolve(&p, &s).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            let wf = check_well_formed(&t);
            assert!(wf.well_formed(), "{name}: {:?}", wf.violations);
        }
    }
}

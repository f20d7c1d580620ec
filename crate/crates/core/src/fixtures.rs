//! The asylum applications cube used throughout the docs and tests.

use crate::config::{Config, GraphConfig};
use crate::instance::CubeInstance;
use crate::optimize::LevelStats;
use crate::qb4olap::{parse_cube_schema, parse_dimension_instances, parse_observations};
use crate::rdf::{parse_turtle, Graph};
use std::collections::BTreeMap;

pub const ASYLUM_SCHEMA_TTL: &str = include_str!("../fixtures/asylum_schema.ttl");
/// The three sample observations (Syria to Germany and France, Sept. 2014).
pub const ASYLUM_TABLE1_TTL: &str = include_str!("../fixtures/asylum_table1.ttl");
pub const ASYLUM_MORE_TTL: &str = include_str!("../fixtures/asylum_more.ttl");

pub const ASYLUM_SCHEMA_GRAPH: &str = "http://www.fing.edu.uy/cubes/schemas/migr_asyappQB4O13";
pub const ASYLUM_INSTANCE_GRAPH: &str = "http://www.fing.edu.uy/cubes/instances/migr_asyapp_clean";
pub const ASYLUM_DATASET: &str = "http://eurostat.linked-statistics.org/data/migr_asyapp";

pub fn asylum_prefixes() -> BTreeMap<String, String> {
    [
        ("sdmxm", "http://purl.org/linked-data/sdmx/2009/measure#"),
        ("sdmxd", "http://purl.org/linked-data/sdmx/2009/dimension#"),
        ("pr", "http://eurostat.linked-statistics.org/property#"),
        ("citizen", "http://eurostat.linked-statistics.org/dic/citizen#"),
        ("geo", "http://eurostat.linked-statistics.org/dic/geo#"),
        ("age", "http://eurostat.linked-statistics.org/dic/age#"),
        ("sex", "http://eurostat.linked-statistics.org/dic/sex#"),
        ("app", "http://eurostat.linked-statistics.org/dic/asyl_app#"),
        ("data", "http://eurostat.linked-statistics.org/data/"),
        ("loc-ins", "http://www.fing.edu.uy/cubes/instances/"),
        ("loc-sch", "http://www.fing.edu.uy/cubes/schemas/"),
        ("sc", "http://www.fing.edu.uy/cubes/schemas/migr_asyapp#"),
        ("citDim", "http://www.fing.edu.uy/cubes/dims/migr_asyapp/citizen#"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

pub fn asylum_graphs() -> GraphConfig {
    GraphConfig::new(ASYLUM_SCHEMA_GRAPH, ASYLUM_INSTANCE_GRAPH, ASYLUM_DATASET).expect("distinct graphs")
}

pub fn asylum_config(endpoint: &str) -> Config {
    Config {
        endpoint: endpoint.to_string(),
        update_endpoint: None,
        graphs: asylum_graphs(),
        prefixes: asylum_prefixes(),
        timeout_secs: None,
    }
}

pub fn asylum_schema_graph() -> Graph {
    parse_turtle(ASYLUM_SCHEMA_TTL).expect("fixture parses")
}

/// Observation graph; `full` adds the extra observations to the sample three.
pub fn asylum_instance_graph(full: bool) -> Graph {
    let mut g = parse_turtle(ASYLUM_TABLE1_TTL).expect("fixture parses");
    if full {
        g.extend(&parse_turtle(ASYLUM_MORE_TTL).expect("fixture parses"));
    }
    g
}

pub fn asylum_cube(full: bool) -> CubeInstance {
    let sg = asylum_schema_graph();
    let (schema, _) = parse_cube_schema(&sg).expect("fixture schema is valid");
    let (dimensions, _) = parse_dimension_instances(&sg, &schema);
    let (observations, _) = parse_observations(&asylum_instance_graph(full), &schema, Some(ASYLUM_DATASET));
    CubeInstance { schema, dimensions, observations }
}

pub fn asylum_level_stats() -> LevelStats {
    LevelStats::from_members(&asylum_cube(false).dimensions)
}

/// Roll-ups, level Dices, a drill-down back to countries and two Slices.
pub const QUERY_AFRICA_CITIZENS: &str = include_str!("../fixtures/queries/africa_citizens.cql");
/// A measure Dice between a roll-up and a drill-down (not well formed).
pub const QUERY_DICE_BETWEEN_NAVIGATION: &str = include_str!("../fixtures/queries/dice_between_navigation.cql");
/// Navigation that cancels out, plus a Slice that absorbs a roll-up.
pub const QUERY_REDUNDANT_NAVIGATION: &str = include_str!("../fixtures/queries/redundant_navigation.cql");
/// Level Dices plus a measure threshold.
pub const QUERY_ASIA_OVER_5000: &str = include_str!("../fixtures/queries/asia_over_5000.cql");

//! Parsing must not depend on triple order: endpoints return triples in any
//! order they like.

use cubeql_core::fixtures::{asylum_schema_graph, ASYLUM_DATASET};
use cubeql_core::qb4olap::{emit_qb4olap, parse_cube_schema_for, parse_dimension_instances};
use cubeql_core::rdf::Graph;
use cubeql_core::ssb;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shuffled(g: &Graph, seed: u64) -> Graph {
    let mut t = g.triples().to_vec();
    t.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Graph::new();
    for x in t {
        out.insert(x);
    }
    out
}

fn sorted_members(g: &Graph, schema: &cubeql_core::model::CubeSchema) -> Vec<(String, Vec<String>)> {
    let (d, _) = parse_dimension_instances(g, schema);
    d.members.into_iter().map(|(k, mut v)| {
        v.sort();
        (k, v)
    }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn asylum_schema_is_order_free(seed in any::<u64>()) {
        let g = asylum_schema_graph();
        // No qb:order in this graph, so only component order may differ.
        let (mut a, _) = parse_cube_schema_for(&g, ASYLUM_DATASET).unwrap();
        let (mut b, _) = parse_cube_schema_for(&shuffled(&g, seed), ASYLUM_DATASET).unwrap();
        a.dimensions.sort_by(|x, y| x.iri.cmp(&y.iri));
        b.dimensions.sort_by(|x, y| x.iri.cmp(&y.iri));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ssb_schema_and_members_are_order_free(seed in any::<u64>()) {
        let cube = ssb::generate_ssb_toy(100_000, 5);
        let e = emit_qb4olap(&cube.schema, &cube.dimensions, &cube.observations);
        let g = e.schema_graph;
        let (a, _) = parse_cube_schema_for(&g, ssb::DATASET).unwrap();
        let h = shuffled(&g, seed);
        let (b, _) = parse_cube_schema_for(&h, ssb::DATASET).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(sorted_members(&g, &a), sorted_members(&h, &b));
    }
}

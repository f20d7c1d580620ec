//! Seeded generator of small cubes over an arbitrary schema.

use crate::instance::{CubeInstance, DimensionInstanceData, Observation, ObservationSet};
use crate::model::{CubeSchema, Level, ValueDomain};
use crate::rdf::{Literal, XSD};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};

/// Sizes and value ranges for a generated cube.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    /// Member count per level IRI; levels not listed get `default_size`.
    pub sizes: BTreeMap<String, usize>,
    pub default_size: usize,
    pub observations: usize,
    /// Inclusive integer range per measure IRI; others use `default_range`.
    pub measure_ranges: BTreeMap<String, (i64, i64)>,
    pub default_range: (i64, i64),
    /// First value of integer attributes, per attribute IRI (default 1).
    pub integer_base: BTreeMap<String, i64>,
    /// Namespace for generated member and observation IRIs.
    pub base_iri: String,
    pub dataset: String,
}

impl ToySpec {
    pub fn new(base_iri: &str, dataset: &str) -> ToySpec {
        ToySpec {
            sizes: BTreeMap::new(),
            default_size: 4,
            observations: 50,
            measure_ranges: BTreeMap::new(),
            default_range: (1, 100),
            integer_base: BTreeMap::new(),
            base_iri: base_iri.to_string(),
            dataset: dataset.to_string(),
        }
    }

    fn size(&self, l: &Level) -> usize {
        self.sizes.get(&l.iri).copied().unwrap_or(self.default_size).max(1)
    }
}

fn member_iri(spec: &ToySpec, l: &Level, i: usize) -> String {
    format!("{}{}/{}", spec.base_iri, l.name, i + 1)
}

fn attribute_value(spec: &ToySpec, l: &Level, attr_iri: &str, domain: ValueDomain, i: usize) -> Literal {
    match domain {
        ValueDomain::String => Literal::plain(format!("{}-{:03}", l.name, i + 1)),
        ValueDomain::Integer => Literal::integer(spec.integer_base.get(attr_iri).copied().unwrap_or(1) + i as i64),
        ValueDomain::Decimal => Literal::typed(format!("{}.5", i), format!("{XSD}decimal")),
        // Increasing with i and always a valid calendar date.
        ValueDomain::Date => Literal::typed(
            format!("{:04}-{:02}-{:02}", 1990 + i / 336, (i / 28) % 12 + 1, i % 28 + 1),
            format!("{XSD}date"),
        ),
    }
}

/// Generates members for every level, one parent per member along every
/// roll-up step, and `spec.observations` distinct cells with integer
/// measures drawn uniformly from their ranges. Same spec and seed, same cube.
pub fn generate_toy_cube(schema: &CubeSchema, spec: &ToySpec, seed: u64) -> CubeInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = DimensionInstanceData::default();
    let mut bottoms: Vec<Vec<String>> = Vec::new();
    for d in &schema.dimensions {
        for l in d.levels.iter().filter(|l| !l.is_all()) {
            for i in 0..spec.size(l) {
                let m = member_iri(spec, l, i);
                dims.add_member(&l.iri, &m);
                for a in &l.attributes {
                    dims.set_attribute(&m, &a.iri, attribute_value(spec, l, &a.iri, a.domain, i));
                }
            }
        }
        // Each child gets one parent; a shuffled balanced assignment keeps
        // every parent used when there are at least as many children.
        let mut done = HashSet::new();
        for h in &d.hierarchies {
            for step in &h.steps {
                let Some(rollup) = &step.rollup else { continue };
                if !done.insert((step.child.clone(), rollup.clone())) {
                    continue;
                }
                let child = d.level(&step.child).expect("step child is a level");
                let parent = d.level(&step.parent).expect("step parent is a level");
                let (nc, np) = (spec.size(child), spec.size(parent));
                let mut slots: Vec<usize> = (0..nc).map(|j| j * np / nc).collect();
                slots.shuffle(&mut rng);
                for (j, p) in slots.into_iter().enumerate() {
                    dims.set_parent(&member_iri(spec, child, j), rollup, &member_iri(spec, parent, p));
                }
            }
        }
        let b = d.bottom();
        bottoms.push((0..spec.size(b)).map(|i| member_iri(spec, b, i)).collect());
    }

    let space: usize = bottoms.iter().map(|b| b.len()).product();
    let target = spec.observations.min(space);
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(target);
    while rows.len() < target {
        let coords: Vec<usize> = bottoms.iter().map(|b| rng.random_range(0..b.len())).collect();
        if !seen.insert(coords.clone()) {
            continue;
        }
        let measures = schema
            .measures
            .iter()
            .map(|m| {
                let (lo, hi) = spec.measure_ranges.get(&m.iri).copied().unwrap_or(spec.default_range);
                rng.random_range(lo..=hi) as f64
            })
            .collect();
        rows.push(Observation {
            iri: format!("{}obs/{}", spec.base_iri, rows.len() + 1),
            coordinates: coords.iter().zip(&bottoms).map(|(i, b)| b[*i].clone()).collect(),
            measures,
        });
    }
    CubeInstance {
        schema: schema.clone(),
        dimensions: dims,
        observations: ObservationSet { dataset: spec.dataset.clone(), rows, skipped: 0 },
    }
}

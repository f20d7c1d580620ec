//! Dimension members, roll-up links and observations.

use crate::model::CubeSchema;
use crate::rdf::Literal;
use std::collections::{BTreeMap, HashMap};

/// Members per level plus their attribute values and roll-up links.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DimensionInstanceData {
    /// Level IRI -> member IRIs in load order.
    pub members: BTreeMap<String, Vec<String>>,
    /// (member, attribute IRI) -> value.
    pub attributes: HashMap<(String, String), Literal>,
    /// (member, roll-up property IRI) -> parent member.
    pub rollups: HashMap<(String, String), String>,
}

impl DimensionInstanceData {
    pub fn add_member(&mut self, level_iri: &str, member: &str) {
        let v = self.members.entry(level_iri.to_string()).or_default();
        if !v.iter().any(|m| m == member) {
            v.push(member.to_string());
        }
    }

    pub fn set_attribute(&mut self, member: &str, attribute: &str, value: Literal) {
        self.attributes.insert((member.to_string(), attribute.to_string()), value);
    }

    pub fn set_parent(&mut self, member: &str, rollup: &str, parent: &str) {
        self.rollups.insert((member.to_string(), rollup.to_string()), parent.to_string());
    }

    pub fn attribute(&self, member: &str, attribute: &str) -> Option<&Literal> {
        self.attributes.get(&(member.to_string(), attribute.to_string()))
    }

    pub fn parent(&self, member: &str, rollup: &str) -> Option<&str> {
        self.rollups.get(&(member.to_string(), rollup.to_string())).map(|s| s.as_str())
    }

    pub fn members_of(&self, level_iri: &str) -> &[String] {
        self.members.get(level_iri).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Member counts keyed by level IRI.
    pub fn level_counts(&self) -> BTreeMap<String, u64> {
        self.members.iter().map(|(k, v)| (k.clone(), v.len() as u64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub iri: String,
    /// Bottom-level member per dimension, in schema order.
    pub coordinates: Vec<String>,
    /// One value per measure, in schema order.
    pub measures: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSet {
    pub dataset: String,
    pub rows: Vec<Observation>,
    /// Observations dropped because a coordinate or measure was missing.
    pub skipped: usize,
}

/// Schema, members and observations of one cube.
#[derive(Debug, Clone)]
pub struct CubeInstance {
    pub schema: CubeSchema,
    pub dimensions: DimensionInstanceData,
    pub observations: ObservationSet,
}

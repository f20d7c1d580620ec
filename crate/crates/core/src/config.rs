//! Endpoint and graph configuration, prefix maps and level statistics files.

use crate::rdf::Prefixes;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: schema and instance graph must differ ({0})")]
    SameGraphs(String),
}

/// Where the schema (structure plus members) and the observations live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub schema_graph: String,
    pub instance_graph: String,
    /// The qb:DataSet whose observations are queried. Empty means "look it
    /// up through qb:structure".
    #[serde(default)]
    pub dataset: String,
}

impl GraphConfig {
    pub fn new(schema_graph: &str, instance_graph: &str, dataset: &str) -> Result<Self, ConfigError> {
        let c = GraphConfig {
            schema_graph: schema_graph.to_string(),
            instance_graph: instance_graph.to_string(),
            dataset: dataset.to_string(),
        };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.schema_graph == self.instance_graph {
            return Err(ConfigError::SameGraphs(self.schema_graph.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    /// SPARQL query endpoint.
    pub endpoint: String,
    /// SPARQL update endpoint; defaults to the query endpoint.
    #[serde(default)]
    pub update_endpoint: Option<String>,
    #[serde(flatten)]
    pub graphs: GraphConfig,
    #[serde(default)]
    pub prefixes: BTreeMap<String, String>,
    /// Query timeout in seconds.
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.graphs.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Config::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Standard vocabulary prefixes overlaid with the configured ones.
    pub fn prefix_table(&self) -> Prefixes {
        let mut p = crate::qb4olap::standard_prefixes();
        for (k, v) in &self.prefixes {
            p.insert(k, v);
        }
        p
    }
}

/// Member counts per level IRI, used to order dimension groups.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub counts: BTreeMap<String, u64>,
}

impl LevelStats {
    pub fn new(counts: BTreeMap<String, u64>) -> Self {
        LevelStats { counts }
    }

    pub fn get(&self, level_iri: &str) -> Option<u64> {
        self.counts.get(level_iri).copied()
    }

    pub fn insert(&mut self, level_iri: impl Into<String>, n: u64) {
        self.counts.insert(level_iri.into(), n);
    }

    /// Counts taken from locally loaded members.
    pub fn from_members(d: &crate::instance::DimensionInstanceData) -> LevelStats {
        LevelStats { counts: d.level_counts() }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        LevelStats::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("stats serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_config() {
        let c = Config::from_toml(
            r#"
endpoint = "http://localhost:7878/query"
schema_graph = "http://g/s"
instance_graph = "http://g/i"
dataset = "http://d"
[prefixes]
sc = "http://sc#"
"#,
        )
        .unwrap();
        assert_eq!(c.graphs.instance_graph, "http://g/i");
        assert_eq!(c.prefix_table().expand("sc:x").unwrap(), "http://sc#x");
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn same_graphs_rejected() {
        let e = Config::from_toml("endpoint = \"e\"\nschema_graph = \"g\"\ninstance_graph = \"g\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::SameGraphs(_)));
    }

    #[test]
    fn stats_round_trip() {
        let mut m = BTreeMap::new();
        m.insert("http://x/continent".to_string(), 5);
        let s = LevelStats::new(m);
        assert_eq!(LevelStats::from_toml(&s.to_toml()).unwrap(), s);
    }
}

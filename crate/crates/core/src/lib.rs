//! Core of the CQL toolchain: cube model, QB4OLAP metadata, the CQL
//! algebra with its simplifier, SPARQL translation and optimization, and an
//! in-memory reference evaluator.

pub mod instance;
pub mod metrics;
pub mod model;
pub mod qb4olap;
pub mod rdf;
pub mod config;
pub mod cql;
pub mod fixtures;
pub mod optimize;
pub mod oracle;
pub mod pipeline;
pub mod random;
pub mod simplify;
pub mod ssb;
pub mod soundness;
pub mod sparql;
pub mod table;
pub mod toy;

//! Talking to a SPARQL 1.1 endpoint: running generated queries, loading a
//! cube, reading its schema and members back, and timing query mixes.

pub mod bench;
pub mod cube;
pub mod executor;

pub use bench::{run_bench, BenchOptions};
pub use cube::{fetch_cube, fetch_level_stats, fetch_schema, load_cube, load_graph};
pub use executor::{ExecError, SparqlClient};

//! Library surface of the `imcf` command-line frontend: the JSON
//! configuration schema and the CSV writers/readers, shared by the binary
//! and the integration tests.

pub mod config;
pub mod output;

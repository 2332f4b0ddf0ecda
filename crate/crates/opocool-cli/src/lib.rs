//! Library side of the `opocool` command-line tool: config parsing, CSV and
//! manifest emission, and the figure-dataset recipes. The binary in `main.rs`
//! is a thin argument-parsing wrapper so integration tests can drive the same
//! code paths directly.

pub mod config;
pub mod figures;
pub mod output;

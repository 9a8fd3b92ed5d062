//! Configuration parsing and run orchestration behind the `assn` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_layers, ConfigError, SolverConfig};
pub use run::{configure_threads, run, sweep, RunSummary};

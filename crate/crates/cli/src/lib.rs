//! Config-driven experiment runner for `ocs-core`: reads a TOML run
//! configuration, executes the listed experiments and writes a JSON report
//! with CSV tables.

pub mod config;
pub mod diff;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use report::RunReport;

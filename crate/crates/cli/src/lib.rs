//! Batch front door for double-phase Galerkin experiments: configuration
//! files, single runs, sweeps, property scenarios and report digests.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod property;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{load, LoadedConfig, RunConfig};
pub use error::{CliError, Result, Verdict, EXIT_CONFIG};
pub use run::{run, sweep, Outcome, RunManifest};

//! Experiment plumbing for `lore`: configuration files, the seed × λ runner
//! and its JSON/CSV reports.

pub mod config;
pub mod error;
pub mod runner;

pub use config::{DataSource, ExperimentConfig, Method};
pub use error::{CliError, CliResult};
pub use runner::{run_experiment, ReportRecord, RunRecord};

//! Experiment driver behind the `alert-swarm` binary: config loading,
//! seeded batch runs, metrics files and the aggregate summary.

pub mod config;
mod error;
pub mod metrics_io;
pub mod run;
pub mod summary;

pub use config::validate_config;
pub use error::{CliError, Result};
pub use run::{report_command, run_command, OutputFormat, RunManifest, SeedSpec};
pub use summary::Summary;

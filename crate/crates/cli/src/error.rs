use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Validation {
        path: PathBuf,
        #[source]
        source: alert_swarm::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed metrics file {path}: {message}")]
    Metrics { path: PathBuf, message: String },

    #[error("invalid seeds: {0}")]
    Seeds(String),

    #[error("no metrics files found in {0}")]
    NoMetrics(PathBuf),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn metrics(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Metrics {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Seeds(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

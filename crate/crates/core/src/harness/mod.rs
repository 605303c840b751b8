//! Configuration, orchestration, and canonical JSON reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, CheckName, ComplementSpec, RunConfig, SubgroupSpec};
pub use report::{emit_report, CheckRecord, VerificationReport};
pub use run::{eval_point, format_eval, run, PointSpec, Setup};

use thiserror::Error;

/// Configuration and construction failures, tagged with the failing key.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{key}: {source}")]
    Build {
        key: String,
        #[source]
        source: crate::Error,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn build(key: impl Into<String>, source: crate::Error) -> Self {
        HarnessError::Build {
            key: key.into(),
            source,
        }
    }

    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

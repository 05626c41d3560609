use std::path::{Path, PathBuf};

use rankexp::log::ValidationReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("log failed validation with {} issue(s)", .0.issues.len())]
    Validation(Box<ValidationReport>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("statistically degenerate input: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Degenerate(_) => 3,
        }
    }

    pub(crate) fn config(path: &Path, message: impl ToString) -> Self {
        CliError::Config {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<rankexp::sim::SimError> for CliError {
    fn from(e: rankexp::sim::SimError) -> Self {
        if e.is_degenerate() {
            CliError::Degenerate(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

impl From<rankexp::AnalysisError> for CliError {
    fn from(e: rankexp::AnalysisError) -> Self {
        if e.is_degenerate() {
            CliError::Degenerate(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

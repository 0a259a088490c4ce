use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Core(#[from] duelgrad::Error),
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} diagnostic checks failed")]
    DiagnosticsFailed { failed: usize, total: usize },
}

impl HarnessError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::DiagnosticsFailed { .. } => 1,
            HarnessError::Config { .. } | HarnessError::Core(_) | HarnessError::Parse { .. } => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

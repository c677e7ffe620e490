use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Solver(#[from] sylvester_core::Error),
}

impl CliError {
    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        if e.is_data() {
            // Type and shape problems inside well-formed JSON.
            CliError::Schema(format!("{e}"))
        } else {
            CliError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code; verdicts use 0 to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

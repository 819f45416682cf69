use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Parse or validation failure; validation lists every violation.
    #[error("config error: {0}")]
    Config(String),

    #[error("solver error in {context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: oscgpc_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed CSV input to `compare`.
    #[error("{path}: {msg}")]
    Csv { path: PathBuf, msg: String },

    #[error("no shared grid points between candidate and reference for {0}")]
    GridMismatch(String),

    #[error("error {error:.3e} exceeds threshold {threshold:.3e} ({what})")]
    Threshold {
        what: String,
        error: f64,
        threshold: f64,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn solver(context: impl Into<String>, source: oscgpc_core::Error) -> Self {
        CliError::Solver {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 solver, 4 threshold, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Threshold { .. } => 4,
            CliError::Io { .. } | CliError::Csv { .. } | CliError::GridMismatch(_) => 1,
        }
    }
}

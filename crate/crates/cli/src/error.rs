use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    /// JSON syntax or schema error; serde reports the offending field and position.
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: good-deal bound B = {bound} is below B0 = {minimum:.6} (exact {minimum})")]
    InfeasibleBound {
        context: String,
        bound: f64,
        minimum: f64,
    },

    #[error("{context}: {source}")]
    Solver {
        context: String,
        source: gooddeal_core::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 1 configuration, 2 infeasible bound, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. }
            | CliError::Parse { .. }
            | CliError::Config(_)
            | CliError::Write { .. } => 1,
            CliError::InfeasibleBound { .. } => 2,
            CliError::Solver { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

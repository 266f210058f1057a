use thiserror::Error;

/// Errors produced by model validation, the static optimizer, the PDE engine
/// and the Monte-Carlo oracle.
///
/// Regime labels carried by variants are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("generator constraint violated at row {row}, column {col}: {reason}")]
    GeneratorConstraint {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("good-deal bound {bound} is below the minimal admissible bound B0 = {minimum}")]
    InfeasibleBound { bound: f64, minimum: f64 },

    #[error("negative good-deal budget {budget} in regime {regime}")]
    InfeasibleBudget { regime: usize, budget: f64 },

    #[error("no feasible kernel candidate in regime {regime}")]
    NoFeasibleCandidate { regime: usize },

    #[error(
        "policy iteration did not converge at time step {step}: residual {residual:e} after {iterations} iterations"
    )]
    PolicyIteration {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("operator is not hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("density has degenerate trace {0:e}")]
    DegenerateDensity(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("function undefined at eigenvalue {0:e}")]
    DomainError(f64),

    #[error("invalid alpha {0}")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("random generation failed: {0}")]
    GenerationFailure(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

use thiserror::Error;

use crate::sdpbound::Residuals;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor factors {factors:?} do not multiply to dimension {dim}")]
    BadFactors { factors: Vec<usize>, dim: usize },

    #[error("subsystem index {index} out of range for {count} factors")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("operator is not real in the computational basis")]
    NotReal,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension budget exceeded: {dim} > {limit}")]
    BudgetExceeded { dim: usize, limit: usize },

    #[error("measurement branch has zero probability")]
    ZeroProbability,

    #[error("choi normalization flag mismatch")]
    NormalizationMismatch,

    #[error("assistance gives no gain for this state (|s| <= |b2|)")]
    NoAssistanceNeeded,

    #[error("solver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NotConverged {
        iterations: usize,
        residuals: Residuals,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

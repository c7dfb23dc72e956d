use thiserror::Error;

use crate::krylov::KrylovReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),

    #[error("tableau construction failed: {0}")]
    ConstructionFailure(String),

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("stability assumption violated: {0}")]
    StabilityViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("krylov breakdown: {0}")]
    Breakdown(String),

    #[error("factor {index} did not converge after {} iterations", report.iterations)]
    FactorSolveFailure { index: usize, report: Box<KrylovReport> },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("singular shift: {0}")]
    SingularShift(String),

    #[error("unsupported finite-difference order {0}")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

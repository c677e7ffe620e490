use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The matrix has an eigenvalue on the closed negative real axis, so the
    /// principal square root is undefined. Shift the problem first.
    #[error("eigenvalue {0} lies on the principal branch cut")]
    BranchCut(Complex64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("spectral gate violated: {0}")]
    Gate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not invertible: {0}")]
    Singular(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

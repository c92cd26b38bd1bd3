use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("measure undefined for dimension {0}")]
    DimensionTooSmall(usize),

    #[error("quadrature did not converge (last change {change:.3e}, tolerance {tol:.3e})")]
    QuadratureNonConvergence { change: f64, tol: f64 },

    #[error("step control failed: {0}")]
    StepControl(String),

    #[error("stability bound violated: dt = {dt:.3e} exceeds {limit:.3e}")]
    StabilityViolation { dt: f64, limit: f64 },

    #[error("boundary contamination: fraction {fraction:.3e} within the boundary band")]
    BoundaryContamination { fraction: f64 },

    #[error("problem size {size} exceeds cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unphysical two-path state: {0}")]
    Unphysical(String),

    #[error("normalization failure: I_av1 + I_av2 = {sum:.6} (tolerance {tol:.3e})")]
    NormalizationFailure { sum: f64, tol: f64 },

    #[error("empty series")]
    EmptySeries,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: need n_modes >= 1 and n_points >= 2*n_modes+1 (got n_modes={n_modes}, n_points={n_points})")]
    InvalidGrid { n_modes: usize, n_points: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("multiply takes 2 or 3 factors, got {0}")]
    FactorCount(usize),

    #[error("the conjugated (modified) system is only defined for pressure law P0")]
    ConjugatedRequiresP0,

    #[error("datum must have zero mean (|mean| = {0:e})")]
    NonZeroMean(f64),

    #[error("jet depth {0} exceeds the supported maximum of {max}", max = crate::jets::MAX_JET_DEPTH)]
    DepthExceeded(usize),

    #[error("no admissible IBP order: c*lambda = {0} must be < 1")]
    NoAdmissibleOrder(f64),

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("continuation schedule undefined: j = {0} < 1 (epsilon too large for the given constants)")]
    ScheduleTooShort(i64),

    #[error("fixed-point iteration is not contracting (ratio {ratio:.3} >= 1 for 3 consecutive iterates)")]
    NotContracting { ratio: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

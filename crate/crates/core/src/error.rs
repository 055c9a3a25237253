use thiserror::Error;

/// Errors produced by the tracking library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PstError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix columns are not orthonormal (max |U'U - I| = {0:e})")]
    NotOrthonormal(f64),

    #[error("detection statistic is indeterminate: smallest eigenvalue of Y_U is {0:e}")]
    IndeterminateStatistic(f64),

    #[error(
        "added-direction coefficients vanish (sum of squares {0:e}); change too small to identify"
    )]
    DegenerateDirection(f64),

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("reference signal is identically zero")]
    ZeroSignal,

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, PstError>;

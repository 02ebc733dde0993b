//! Error type shared by every module in the crate.
//!
//! Numerical payloads are reported as `f64` regardless of the scalar type
//! the computation ran in, so the enum stays object-safe and printable.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building or running a chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle size must be at least 3, got {0}")]
    CycleSizeTooSmall(usize),

    #[error("state index {index} out of range for a {m}-point cycle")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("cycle size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("vector of length {len} does not match cycle size {m}")]
    LengthMismatch { len: usize, m: usize },

    #[error("probability at state {index} is negative: {value}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("weights sum to {0}; cannot normalize")]
    DegenerateWeights(f64),

    #[error("target pmf must be strictly positive, state {index} has mass {value}")]
    NotStrictlyPositive { index: usize, value: f64 },

    #[error("rate scale alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("fractional order beta must lie in (0, 1], got {0}")]
    InvalidBeta(f64),

    #[error("time must be nonnegative and finite, got {0}")]
    InvalidTime(f64),

    #[error("concentration kappa must be nonnegative and finite, got {0}")]
    InvalidKappa(f64),

    #[error("concentration rho must lie in (0, 1), got {0}")]
    InvalidRho(f64),

    #[error("location mu must be finite, got {0}")]
    InvalidMu(f64),

    #[error("Bessel argument must be nonnegative and finite, got {0}")]
    InvalidBesselArgument(f64),

    #[error("kernel entry at offset {offset} is {value}, below the positivity floor")]
    KernelNotPositive { offset: usize, value: f64 },

    #[error("generator off-diagonal at ({row}, {col}) is {value}, below the positivity floor")]
    NegativeRate { row: usize, col: usize, value: f64 },

    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),

    #[error("observation times must be nondecreasing: time {value} at index {index} is below its predecessor {prev}")]
    DecreasingTimes { index: usize, value: f64, prev: f64 },

    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),

    #[error("observation lists have mismatched lengths: {times} times vs {states} states")]
    ObservationShapeMismatch { times: usize, states: usize },

    #[error("resultant length must lie in (0, 1], got {0}")]
    InvalidResultant(f64),

    #[error("search bracket must satisfy 0 < lo < hi with finite ends, got ({lo}, {hi})")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("generator too stiff: uniformization would need {terms} series terms (rate-time product {lambda_t:.3e}); use a shorter time or a less concentrated target")]
    StiffGenerator { lambda_t: f64, terms: usize },

    #[error("{0}")]
    FileFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

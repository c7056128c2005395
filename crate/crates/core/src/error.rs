use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tail exponent x level equals the dimension ({product} = {d}); this boundary case is excluded")]
    BoundaryCase { product: f64, d: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error(
        "quadrature did not converge: estimate {estimate}, error {error} > tolerance {tolerance}"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("circulant embedding clip error {clip_error:.3e} exceeds ceiling {ceiling:.3e} (padded size {padded_size})")]
    EmbeddingFailure {
        clip_error: f64,
        ceiling: f64,
        padded_size: usize,
    },

    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hermite degree {0} exceeds the supported maximum of 64")]
    DegreeTooLarge(usize),

    #[error("all Hermite coefficients vanish up to order {0}")]
    AllZero(usize),

    #[error("functional returned a non-finite value at node {node}")]
    NonFiniteValue { node: usize },

    #[error("degenerate Student denominator at node {node}")]
    DegenerateDenominator { node: usize },

    #[error("sample set is empty")]
    EmptySample,

    #[error("sample variance is zero")]
    DegenerateVariance,

    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by dataset construction, clustering, depth evaluation,
/// optimization, and the attack pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("csv parse error at row {row}, col {col}: {message}")]
    CsvParse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("csv row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value at row {row}, col {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("singular covariance (n={n}, m={m}); use COMD for high-dimensional data")]
    SingularCovariance { n: usize, m: usize },

    #[error("zero variance in every coordinate; depth is undefined")]
    AllCoordinatesDegenerate,

    #[error("target sample {index} has depth {depth:.6} below floor {floor:.6}; target is already near-outlying")]
    TargetBelowDepthFloor {
        index: usize,
        depth: f64,
        floor: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate surrogate centers at indices {first} and {second}")]
    DuplicateCenters { first: usize, second: usize },

    #[error("singular interpolation system ({size}x{size}); centers may be affinely dependent")]
    SingularSystem { size: usize },

    #[error("non-finite perturbation component at index {index}")]
    NonFinitePerturbation { index: usize },

    #[error("degenerate clusters: {0}")]
    DegenerateClusters(String),

    #[error("unknown backend '{0}', expected 'kmeans' or 'ward'")]
    UnknownBackend(String),
}

pub type Result<T> = std::result::Result<T, Error>;

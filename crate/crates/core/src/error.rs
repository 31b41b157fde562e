use std::path::PathBuf;

/// Errors produced while building samples or running detectors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time grid needs at least 2 points, got {0}")]
    GridTooShort(usize),

    #[error("time grid is not strictly increasing at position {0}")]
    GridNotIncreasing(usize),

    #[error("invalid grid weights: {0}")]
    InvalidWeights(String),

    #[error("sample too small: n < {required} (got {actual} curves)")]
    TooFewCurves { required: usize, actual: usize },

    #[error("row {row} has {actual} values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in curve {curve} at grid position {position}")]
    NonFinite { curve: usize, position: usize },

    #[error("cannot parse {cell:?} as a number (line {line}, column {column})")]
    Parse {
        line: usize,
        column: usize,
        cell: String,
    },

    #[error("curve index {index} out of range for a sample of {n} curves")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("need at least {required} values, got {actual}")]
    TooFewValues { required: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

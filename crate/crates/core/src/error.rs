use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or unreadable input data.
    Data,
    /// Numerical or sampler failure on otherwise valid data.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    /// `row` is the 1-based data row, not counting the header.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: close price must be positive, got {value}")]
    NonPositivePrice { row: usize, value: f64 },

    #[error("row {row}: date {date} does not come after the previous date")]
    UnorderedDates { row: usize, date: String },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("series mean is not positive, cannot normalize")]
    ZeroMean,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exogenous series required by the model is missing")]
    MissingExogenous,

    #[error("exogenous series present but the model has no gamma term")]
    UnexpectedExogenous,

    #[error("non-finite variance at t={0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("scale matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("pilot draws have zero scatter")]
    ZeroScatter,

    #[error("covariance of pilot draws is rank deficient even after jitter")]
    RankDeficient,

    #[error(
        "burn-in never accepted a proposal; try a different starting point or a larger scale inflation"
    )]
    FlatChain,

    #[error("{0}")]
    Report(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::NonPositivePrice { .. }
            | Error::UnorderedDates { .. }
            | Error::TooShort { .. }
            | Error::ZeroMean
            | Error::LengthMismatch { .. }
            | Error::MissingExogenous
            | Error::UnexpectedExogenous
            | Error::Report(_) => ErrorClass::Data,
            _ => ErrorClass::Numeric,
        }
    }
}

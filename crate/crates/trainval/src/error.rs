//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),

    #[error("example {id:?} has {got} features, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown example id {0:?}")]
    UnknownId(String),

    #[error("example {0:?} is not a positive example")]
    NotPositive(String),

    #[error("dataset has no positive examples")]
    NoPositives,

    #[error("dataset has no negative examples")]
    NoNegatives,

    #[error("need at least {needed} negative examples, found {found}")]
    TooFewNegatives { needed: usize, found: usize },

    #[error("{what} must be in {range}, got {got}")]
    OutOfRange {
        what: &'static str,
        range: &'static str,
        got: f64,
    },

    #[error("split with eval fraction {fraction} would leave a part without both classes")]
    InfeasibleSplit { fraction: f64 },

    #[error("subsample with fraction {fraction} would not retain both classes")]
    InfeasibleSubsample { fraction: f64 },

    #[error("no id {0:?} in external scores")]
    MissingScore(String),

    #[error("average precision is undefined without a positive example")]
    NoPositiveScores,

    #[error("score for {id:?} is not finite")]
    NonFiniteScore { id: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("need at least {needed} items for {what}, got {got}")]
    TooFewItems {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("empty ranking")]
    EmptyRanking,

    #[error("empty performance curve")]
    EmptyCurve,

    #[error("histogram-intersection kernel requires nonnegative features (example {0:?})")]
    NegativeFeature(String),

    #[error("vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("exhaustive search over {got} batches exceeds the cap of {cap}")]
    TooManyBatches { got: usize, cap: usize },

    #[error("ordering does not match the dataset positives: {0}")]
    OrderMismatch(String),

    #[error("selection trace failed verification: {0}")]
    TraceMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

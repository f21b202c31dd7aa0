//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("prototype context has no generic representation, required by this operation")]
    MissingGeneric,

    #[error("prototype context has no background constant, required by this operation")]
    MissingBackground,

    #[error("background constant must be finite and nonnegative, got {0}")]
    InvalidBackground(f64),

    #[error("unknown class id {0}")]
    UnknownClass(usize),

    #[error("duplicate prototypes: slots {0} and {1} coincide")]
    DuplicatePrototypes(String, String),

    #[error("bisector of coincident points is undefined")]
    CoincidentPoints,

    #[error("threshold {0} outside [0, 1] for a softmax-based detector")]
    InvalidThreshold(f64),

    #[error("point is not {class}-viable: {reason}")]
    NotViable { class: usize, reason: String },

    #[error("linear program is numerically indeterminate: {0}")]
    LpIndeterminate(String),

    #[error("witness search failed: {0}")]
    WitnessSearch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset error at line {line}: {message}")]
    Dataset { line: u64, message: String },

    #[error("class {class} has {available} records, need {needed}")]
    InsufficientRecords {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("need at least {needed} classes, dataset has {available}")]
    InsufficientClasses { needed: usize, available: usize },

    #[error("scored set needs both OOS and in-support entries: {0}")]
    SingleClassScores(&'static str),

    #[error("training aborted: {0}")]
    Training(String),

    #[error("malformed parameter document: {0}")]
    Params(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

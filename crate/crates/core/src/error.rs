use std::path::PathBuf;

use crate::data::NodeCount;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: field `{field}`: {message}")]
    MalformedRow {
        line: u64,
        field: &'static str,
        message: String,
    },

    #[error("line {line}: non-positive eta {value}")]
    NonPositiveEta { line: u64, value: f64 },

    #[error("line {line}: label {value} outside 1..=4")]
    LabelOutOfRange { line: u64, value: i64 },

    #[error("line {line}: field `{field}` has out-of-domain value `{value}`")]
    OutOfDomain {
        line: u64,
        field: &'static str,
        value: String,
    },

    #[error("unexpected header {found:?}, expected {expected:?}")]
    BadHeader { found: String, expected: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("class {class} absent from training data")]
    ClassAbsent { class: NodeCount },

    #[error("class {class} has {count} examples, need at least {required}")]
    TooFewExamples {
        class: NodeCount,
        count: usize,
        required: usize,
    },

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid k = {k} for {stored} stored examples")]
    InvalidK { k: usize, stored: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("all labels belong to a single class; ROC is undefined")]
    SingleClass,

    #[error("row {row} of the conditional distribution sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },

    #[error("confusion matrix row for class {class} is empty")]
    EmptyRow { class: NodeCount },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MalformedRow { .. }
                | Error::NonPositiveEta { .. }
                | Error::LabelOutOfRange { .. }
                | Error::OutOfDomain { .. }
                | Error::BadHeader { .. }
                | Error::Csv(_)
                | Error::EmptyDataset
                | Error::ClassAbsent { .. }
                | Error::TooFewExamples { .. }
                | Error::NotStochastic { .. }
                | Error::EmptyRow { .. }
        )
    }
}

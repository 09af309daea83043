use thiserror::Error;

use crate::data::Task;

pub type Result<T> = std::result::Result<T, VimError>;

#[derive(Debug, Error)]
pub enum VimError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed cell at row {row}, column {column}: {value:?}")]
    MalformedCell {
        /// 1-based line number in the file (the header is line 1).
        row: usize,
        /// 1-based column number.
        column: usize,
        value: String,
    },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("score for feature {feature} is NaN")]
    NanScore { feature: usize },

    #[error("{method} does not support {task} tasks")]
    UnsupportedTask { method: String, task: Task },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("response variance is zero (var = {0:e})")]
    ConstantResponse(f64),

    #[error("degenerate leaf: hessian sum plus lambda is {0}")]
    DegenerateLeaf(f64),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

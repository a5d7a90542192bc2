use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed bundle header: {0}")]
    MalformedHeader(String),

    #[error("shape mismatch in `{field}`: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        field: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("truncated tensor data for `{field}`: needs bytes {start}..{end}, file holds {available}")]
    TruncatedTensor {
        field: String,
        start: usize,
        end: usize,
        available: usize,
    },

    #[error("invalid token sequence: {0}")]
    InvalidSequence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("document has no tokens; curve is undefined")]
    EmptyDocument,

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("document has no sentences")]
    NoSentences,

    #[error("annotation record {index}: {message}")]
    Annotation { index: usize, message: String },

    #[error("annotators disagree on the label of review `{review_id}` with no majority")]
    AmbiguousLabel { review_id: String },

    #[error("no heatmap for review `{review_id}`")]
    MissingHeatmap { review_id: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

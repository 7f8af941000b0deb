use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: missing column `{column}`")]
    MissingColumn { column: String },

    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("validation error at row {row}: {message}")]
    Validation { row: u64, message: String },

    #[error("invalid keyword pattern {source_text:?}: {reason}")]
    Pattern { source_text: String, reason: String },

    #[error("lexicon file line {line}: {message}")]
    LexiconSyntax { line: usize, message: String },

    #[error("corpus too small: need at least {needed} sentences, got {got}")]
    CorpusTooSmall { needed: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("stale tape: model changed since the forward pass")]
    StaleTape,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("length mismatch: {predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("predictions missing for {} id(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("predictions reference {} id(s) not in the corpus: {}", .0.len(), .0.join(", "))]
    UnknownPredictionIds(Vec<String>),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

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
}

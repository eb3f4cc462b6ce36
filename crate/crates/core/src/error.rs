use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no digits found in target text {0:?}")]
    TargetExtraction(String),

    #[error("unseen category {value:?} in column {column:?}")]
    UnseenCategory { column: String, value: String },

    #[error("encoding error at row {row}: {source}")]
    EncodingAtRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("design matrix is rank-deficient; dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("column mismatch: missing {missing:?}, extra {extra:?}")]
    ColumnMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),

    #[error("fold {fold} failed: {source}")]
    FoldFailed {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all grid candidates failed: {}", reasons.join("; "))]
    AllCandidatesFailed { reasons: Vec<String> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the row index it occurred at.
    pub fn at_row(self, row: usize) -> Error {
        Error::EncodingAtRow {
            row,
            source: Box::new(self),
        }
    }
}

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in `{path}`: {message}")]
    Csv { path: String, message: String },

    #[error("duplicate column name `{0}` in header")]
    DuplicateColumn(String),

    #[error("zero data rows")]
    ZeroDataRows,

    #[error("dataset has no columns")]
    EmptyDataset,

    #[error("column has no non-missing cells")]
    AllCellsMissing,

    #[error("column length mismatch: `{column}` has {actual} values, expected {expected}")]
    ColumnLengthMismatch {
        column: String,
        actual: usize,
        expected: usize,
    },

    #[error("registry schema violation in `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("duplicate model `{0}` in registry")]
    DuplicateModel(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("no eligible models after hard filters")]
    EmptyPool,

    #[error("unknown intent `{0}` (expected privacy, fidelity, or utility)")]
    UnknownIntent(String),

    #[error("no oracle metric rows for dataset `{dataset}` under intent `{intent}`")]
    MissingOracle { dataset: String, intent: String },

    #[error("duplicate ranking entry `{0}`")]
    DuplicateRankingEntry(String),

    #[error("ranking overlap has fewer than two models")]
    OverlapTooSmall,

    #[error("no prediction/oracle pairs to evaluate")]
    EmptyPairList,

    #[error("table schema mismatch: {0}")]
    TableMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("calibration requires at least one training pair")]
    NoTrainingPairs,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn invalid_param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

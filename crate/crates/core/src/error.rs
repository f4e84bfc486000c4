use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by ingestion, validation and feature extraction.
#[derive(Debug, Error)]
pub enum Error {
    /// A required column is missing.
    #[error("missing required column `{0}`")]
    Schema(String),

    /// A column holds a value of the wrong type (or a null where none is allowed).
    #[error("column `{column}` has an invalid type or null at row {row}")]
    Type { column: String, row: usize },

    /// A value is well-typed but outside its domain.
    #[error("column `{column}` row {row}: {reason}")]
    InvalidValue {
        column: String,
        row: usize,
        reason: String,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is not numeric")]
    NonNumericColumn(String),

    #[error("column `{column}` has {found} rows, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("duplicate feature row for user `{user}` at window {window_start}")]
    DuplicateKey { user: String, window_start: i64 },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("table `{0}` does not exist")]
    MissingTable(String),

    #[error("no score for answer {answer:?} to question `{question_id}` in instance `{instance_id}`")]
    UnmappedAnswer {
        instance_id: String,
        question_id: String,
        answer: String,
    },

    #[error("at least two feature columns are required, got {0}")]
    TooFewColumns(usize),

    #[error("nothing to render")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("SQLite error in {path}: {source}")]
    Sqlite {
        path: PathBuf,
        #[source]
        source: rusqlite::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(column: &str, row: usize, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            column: column.to_string(),
            row,
            reason: reason.into(),
        }
    }
}

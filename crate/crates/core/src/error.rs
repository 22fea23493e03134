//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of a record file could not be parsed at all.
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    /// A parsed record violates one of the record invariants.
    #[error("line {line}, photo `{photo_id}`, field `{field}`: {message}")]
    InvalidRecord {
        line: usize,
        photo_id: String,
        field: String,
        message: String,
    },

    /// Two records of one gallery disagree on a vector dimension.
    #[error(
        "dimension mismatch in field `{field}`: photo `{first}` has {first_len}, photo `{second}` has {second_len}"
    )]
    DimensionMismatch {
        field: String,
        first: String,
        first_len: usize,
        second: String,
        second_len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model file error: {0}")]
    Model(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

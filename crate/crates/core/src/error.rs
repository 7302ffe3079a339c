use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{context}, line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("corpus too small: {len} symbols, need at least {min}")]
    CorpusTooSmall { len: usize, min: usize },

    #[error("sequence too short: {len} symbols, need at least {min}")]
    SequenceTooShort { len: usize, min: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("key at level {level} is not replayable: skip {skip} shares a factor with {len}")]
    ReplayIncompatible { level: usize, skip: u64, len: usize },

    #[error("lexicon is empty after loading")]
    EmptyLexicon,

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid training set: {0}")]
    Training(String),

    #[error("normal equations are singular (column {column})")]
    Singular { column: usize },

    #[error("feature arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 1 usage, 2 data validation, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Singular { .. } | Error::Checkpoint(_) => 3,
            _ => 2,
        }
    }
}

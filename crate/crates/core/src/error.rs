//! Error taxonomy shared across the crate.
//!
//! Variants are grouped so the CLI can map each failure class to a distinct
//! exit code: configuration, input/data, training, and I/O.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A config value is inconsistent (shape mismatch, invalid hyperparameter,
    /// unknown target name, adapter/model disagreement).
    #[error("configuration error: {0}")]
    Config(String),

    /// A runtime input violates an operation's precondition.
    #[error("input error: {0}")]
    Input(String),

    /// A dataset or corpus is malformed or internally inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A file could not be parsed; carries the offending line when known.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Training diverged or could not proceed.
    #[error("training error: {0}")]
    Training(String),

    /// An operation was invoked on a structure in the wrong state.
    #[error("state error: {0}")]
    State(String),

    /// Back-translation or another augmentation step failed.
    #[error("augmentation error ({language}): {cause}")]
    Augmentation { language: String, cause: String },

    /// Analysis inputs are incompatible (checkpoint/config mismatch, missing ids).
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("export error: {0}")]
    Export(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

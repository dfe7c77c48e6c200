use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Bad input data. `row` is 1-based when the problem sits on a specific line.
    #[error("input error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Input { message: String, row: Option<usize> },

    #[error("format error: {0}")]
    Format(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input { message: msg.into(), row: None }
    }

    pub(crate) fn input_at(row: usize, msg: impl Into<String>) -> Self {
        Error::Input { message: msg.into(), row: Some(row) }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

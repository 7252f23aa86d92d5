// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the scan, calibration and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A sample is NaN or infinite. `index` is 1-based.
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("index out of range: {0}")]
    Index(String),

    /// Inconsistent parameters (minimum segment length, level, replicate count, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Data that the model cannot be fit to (zero variance and similar).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Data that violates the model's support (negative counts and similar).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

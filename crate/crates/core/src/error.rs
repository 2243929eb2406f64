//! Crate-wide error type.

use std::fmt;

/// Errors produced by the engine.
#[derive(Debug)]
pub enum Error {
    /// Matrix or vector shapes do not line up.
    Dim(String),
    /// A configuration value violates an invariant.
    Config(String),
    /// A computation produced or received a non-finite value.
    Numeric(String),
    /// Malformed on-disk artifact (bad magic, truncated file, ...).
    Format(String),
    /// Invalid command-line usage or missing required input.
    Usage(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dim(m) => write!(f, "dimension error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Format(m) => write!(f, "format error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

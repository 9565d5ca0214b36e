//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed vertex encoding: {0}")]
    Encoding(String),
    #[error("operation not supported for family {0}")]
    Unsupported(String),
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("no room: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

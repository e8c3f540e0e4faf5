use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signature matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("factor graph is not connected")]
    Disconnected,
    #[error("factor graph contains length-4 cycles")]
    FourCycle,
    #[error("invalid edge subset: {0}")]
    InvalidEdgeSubset(String),
    #[error("{users} users exceeds the exhaustive enumeration cap of {cap}")]
    EnumerationCap { users: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

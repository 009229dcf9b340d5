use thiserror::Error;

use crate::rational::ParseRationalError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative value {value} at agent {agent}, item {item}")]
    NegativeValue {
        agent: usize,
        item: usize,
        value: String,
    },

    #[error(transparent)]
    MalformedRational(#[from] ParseRationalError),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("search space of {size} allocations exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: String, cap: u64 },

    #[error("mechanism support exceeds the cap of {cap} outcomes")]
    SupportTooLarge { cap: u64 },

    #[error("expected a square instance, got {agents} agents and {items} items")]
    NotSquare { agents: usize, items: usize },

    #[error("unsupported index for this operation: {0}")]
    UnsupportedIndex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

use crate::hypercube::SubsetMask;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {0} outside the supported range 1..={max}", max = crate::hypercube::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("coordinate {index} out of range for dimension {d}")]
    CoordinateOutOfRange { index: usize, d: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("families {first} and {second} share member {member} without being identical")]
    TrivialIntersectionViolation {
        first: usize,
        second: usize,
        member: SubsetMask,
    },

    #[error("enumeration budget exceeded: estimated {estimate} elementary evaluations, cap {cap}")]
    BudgetExceeded { estimate: u128, cap: u128 },

    #[error("partition size {0} outside the enumerable range 1..={max}", max = crate::partition::MAX_PARTITION_SIZE)]
    PartitionSize(usize),

    #[error("invalid stratum: {0}")]
    InvalidStratum(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state space exceeds enumeration cap of {cap} states")]
    EnumerationCapExceeded { cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("negative input {0}")]
    NegativeInput(f64),

    #[error("empty vector")]
    EmptyVector,

    #[error("grid too small: {got} points, need at least {min}")]
    GridTooSmall { got: usize, min: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("chain is reducible")]
    ReducibleChain,

    #[error("chain is periodic with period {0}")]
    PeriodicChain(usize),

    #[error("state space of {states} states is too large for exhaustive cut enumeration (max {max})")]
    StateSpaceTooLarge { states: usize, max: usize },

    #[error("reference measure must be strictly positive")]
    NonPositiveMeasure,

    #[error("reference distribution lacks full support")]
    ReferenceNotFullSupport,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("window [{b1}, {b2}] out of range for horizon {horizon}")]
    WindowOutOfRange { b1: u64, b2: u64, horizon: f64 },

    #[error("no snapshot near t = {0}")]
    NoSnapshotNear(f64),

    #[error("linear program infeasible")]
    Infeasible,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

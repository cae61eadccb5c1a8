use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in component {component} of observation {index}")]
    NonFinite { index: u64, component: usize },

    #[error("observation index {got} does not follow {last}")]
    OutOfOrder { last: u64, got: u64 },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lag {lag} must be smaller than window length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("zero-width grid")]
    ZeroWidthGrid,

    #[error("empty binned sample")]
    EmptyBinnedSample,

    #[error("zero scale")]
    ZeroScale,

    #[error("zero MAD")]
    ZeroMad,

    #[error("condition point outside data support")]
    OutsideSupport,

    #[error("grids are not aligned")]
    GridMismatch,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("insufficient data: need {need}, have {have}")]
    InsufficientData { need: usize, have: usize },

    #[error("point is not a member of the combined sample")]
    NotInSample,

    #[error("{0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

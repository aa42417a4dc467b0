use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {re}+{im}i lies on the open slit above {base}")]
    OnSlit { re: f64, im: f64, base: f64 },

    #[error("point {0} lies strictly inside the swallowed boundary interval")]
    InsideHullBase(f64),

    #[error("index range {from}..{to} out of bounds for chain of {len} slits")]
    IndexRange { from: usize, to: usize, len: usize },

    #[error("step {step}: drift increment {increment:.3e} exceeds stability bound {bound:.3e}")]
    StepSize {
        step: usize,
        increment: f64,
        bound: f64,
    },

    #[error(
        "resolution {resolution} too coarse: median trace gap {median_gap:.3e} is below twice the pixel size"
    )]
    ResolutionTooCoarse { resolution: f64, median_gap: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, SleError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SleError {
    SleError::InvalidParameter(msg.into())
}

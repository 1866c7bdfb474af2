use thiserror::Error;

/// Errors raised across simulation, bound evaluation, oracles and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("path must contain at least one value")]
    EmptyPath,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time {time} is not a point of the path grid")]
    MissingGridPoint { time: f64 },

    #[error("floating-point overflow: {0}")]
    Overflow(String),

    #[error("population exceeded the cap of {cap}")]
    PopulationCap { cap: u64 },

    #[error("constant a must be positive, got {0}")]
    NonPositiveA(f64),

    #[error("threshold alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("L^p exponent must exceed 1, got {0}")]
    BadExponent(f64),

    #[error("threshold {alpha} must exceed the starting value {z}")]
    ThresholdBelowStart { z: f64, alpha: f64 },

    #[error("enumeration needs {paths} paths, cap is {cap}")]
    TooManyPaths { paths: f64, cap: u64 },

    #[error("mass {mass:e} above the truncation cap exceeds tolerance {tol:e}")]
    CapTooSmall { mass: f64, tol: f64 },

    #[error("drift must be negative for a finite all-time supremum, got {0}")]
    PositiveDrift(f64),

    #[error("function decreases between x={x0} and x={x1}")]
    NotMonotone { x0: f64, x1: f64 },

    #[error("value {value} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("no bin holds at least {min_samples} samples")]
    InsufficientData { min_samples: usize },

    #[error("mean decay is not known for {0}")]
    UnknownMeanDecay(String),

    #[error("increment {increment} does not exceed the jump floor {ell}")]
    JumpFloor { increment: f64, ell: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

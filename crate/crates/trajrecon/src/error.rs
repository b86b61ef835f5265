use thiserror::Error;

/// Errors shared across fitting, preprocessing, evaluation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series must contain at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample times must be strictly increasing (violation at index {index})")]
    NonIncreasingTimes { index: usize },

    #[error("non-finite value in field `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("velocity column must be present for all samples of a trip or none")]
    PartialVelocity,

    #[error("method {method} requires observed velocities")]
    MissingVelocity { method: &'static str },

    #[error("positions must be nondecreasing for {method} (violation at index {index})")]
    NonMonotonePositions { method: &'static str, index: usize },

    #[error("query time {t} outside model domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("invalid parameter {name}: {reason}")]
    BadParameter { name: &'static str, reason: String },

    #[error("linear system is singular or not positive definite (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("subsample target interval {target} below native mean interval {native}")]
    SubsampleTooDense { target: f64, native: f64 },

    #[error("holdout produced an empty held set (n = {n}, fraction = {fraction})")]
    EmptyHoldout { n: usize, fraction: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("unknown method name `{0}`")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

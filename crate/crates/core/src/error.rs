use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale K={k} exceeds the dimension cap (2^(K+1) must be at most {cap})")]
    ScaleTooLarge { k: u32, cap: usize },

    #[error("scale order violated: from K={from} to K={to}")]
    ScaleOrder { from: u32, to: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("grid mismatch: scale {0} vs {1}")]
    GridMismatch(u32, u32),

    #[error("total mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),

    #[error("CFL condition violated: dt={dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("lattice of {points} points exceeds the memory cap of {cap}")]
    MemoryCap { points: usize, cap: usize },

    #[error("lattice domain too small: extent {extent} below required {required}")]
    DomainTooSmall { extent: f64, required: f64 },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("point outside the guaranteed-accuracy region: {0}")]
    OutOfRegion(String),

    #[error("Gateaux density unavailable for this initial condition")]
    DensityUnavailable,
}

pub type Result<T> = std::result::Result<T, Error>;

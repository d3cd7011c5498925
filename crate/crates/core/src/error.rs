use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {time} is not a grid point of level {level} on [0, {horizon}]")]
    OffGrid { time: f64, level: u32, horizon: f64 },

    #[error("variable X{var} has degree {degree}, above the supported {max}")]
    DegreeTooHigh { var: usize, degree: u32, max: u32 },

    #[error("chaos order {order} exceeds the supported maximum {max}")]
    OrderOverflow { order: usize, max: usize },

    #[error("degenerate Hankel matrix for continuous family {family}: E[P_{degree}^2] = {norm:e}")]
    DegenerateHankel { family: String, degree: usize, norm: f64 },

    #[error("realization covers {available} indices but index {index} is required")]
    MissingIndex { index: usize, available: usize },

    #[error("model has no family for index {0}")]
    UnassignedIndex(usize),

    #[error("functional returned non-finite value {value} at replicate {replicate}")]
    NonFinite { replicate: u64, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

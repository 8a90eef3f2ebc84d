use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state has {found} sites, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite amplitude in state")]
    NonFinite,
    #[error("integration diverged at t = {time:e} s (|amplitude| = {magnitude:e})")]
    Diverged { time: f64, magnitude: f64 },
    #[error("step size underflow at t = {time:e} s")]
    StepUnderflow { time: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

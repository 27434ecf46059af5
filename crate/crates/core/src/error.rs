use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("numerical blow-up at t = {time}")]
    NumericalBlowup { time: f64 },

    #[error("time step {dt:e} underflowed at t = {time}")]
    Stiffness { dt: f64, time: f64 },

    #[error("reference horizon too long: smoothness monitor tripped at t = {time}")]
    HorizonTooLong { time: f64 },

    #[error("time {t} outside stored horizon [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("boundary layer under-resolved at epsilon = {epsilon}: {cells} cells in strip")]
    UnderResolvedLayer { epsilon: f64, cells: usize },

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("horizon mismatch: {0}")]
    HorizonMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

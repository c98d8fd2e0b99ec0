use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable system: traffic intensity rho = {rho} is not below 1")]
    Unstable { rho: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("not down-skip-free: step {from} -> {to} at position {position}")]
    NotDownSkipFree { position: usize, from: u64, to: u64 },

    #[error("non-positive duration {value} at index {index}")]
    NonPositiveDuration { index: usize, value: f64 },

    #[error("argument {arg} outside the convergence domain ({bound})")]
    Domain { arg: f64, bound: String },

    #[error("numerically singular denominator at argument {arg}")]
    Singular { arg: f64 },

    #[error("fixed-point iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    #[error("invalid transformation: {0}")]
    InvalidTransformation(String),

    #[error("corrupt data: {0}")]
    CorruptData(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

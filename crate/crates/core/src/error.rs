use thiserror::Error;

/// Errors raised while building models, coefficients, densities and metrics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unstable model: utilisation {rho} must be below 1")]
    Unstable { rho: f64 },
    #[error("state-space truncation too small: retained mass {mass}")]
    TruncationTooSmall { mass: f64 },
    #[error("drift has no sign change on the support, no fluid equilibrium")]
    NoEquilibrium,
    #[error("diffusion coefficient is not positive at x = {x} (value {value})")]
    NonPositive { x: f64, value: f64 },
    #[error("truncation level eta must be positive, got {0}")]
    EtaNonPositive(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error("division by zero while evaluating the coefficient at x = {0}")]
    DivisionByZero(f64),
    #[error("stationary density is not integrable: {0}")]
    Divergent(String),
    #[error("diffusion coefficient must be positive on the support (x = {x}, v = {value})")]
    NonPositiveV { x: f64, value: f64 },
    #[error("test function is not integrable against the density: {0}")]
    NonIntegrable(String),
    #[error("reference tail probability is zero at z = {0}")]
    ZeroDenominator(f64),
    #[error("rate fit needs positive errors, got {0}")]
    NonPositiveError(f64),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("consistency condition violated: {0}")]
    Consistency(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("derivative extrapolation stalled at error {err:e} (tolerance {tol:e})")]
    Extrapolation { err: f64, tol: f64 },

    #[error("tube violation in {component} at x = {x}, t = {t}: deviation {deviation:e} exceeds rho = {rho}")]
    TubeViolation {
        component: &'static str,
        x: f64,
        t: f64,
        deviation: f64,
        rho: f64,
    },

    #[error("picard continuation stalled, a_inf estimate {a_inf}")]
    Stalled { a_inf: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("instability detected at t = {t}: norm {norm:e}")]
    Instability { t: f64, norm: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("threshold not attained within horizon {horizon}")]
    NotAttained { horizon: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("residual check failed: {0}")]
    Residual(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {flo}, f(hi) = {fhi})")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("{what} did not converge after {iterations} iterations (error estimate {estimate:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        estimate: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies outside the domain: {0}")]
    OutsideDomain(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("level {level} is too close to a critical value: {reason}")]
    CriticalLevel { level: f64, reason: String },

    #[error("indicatrix envelope has a coverage gap near rho = {rho}")]
    EnvelopeGap { rho: f64 },

    #[error("estimate unresolved: {0}")]
    Unresolved(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Bracket { .. }
                | Error::Convergence { .. }
                | Error::CriticalLevel { .. }
                | Error::EnvelopeGap { .. }
                | Error::Unresolved(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {requested} exceeds the cap {cap}")]
    Order { requested: usize, cap: usize },
    #[error("range error: {0}")]
    Range(String),
    #[error("time ordering violated: s = {s} > t = {t}")]
    Ordering { s: f64, t: f64 },
    #[error("grid under-resolves the multiplier; need at least M = {required}")]
    Resolution { required: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("quadrature did not converge: {0}")]
    Accuracy(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("spatial truncation too small; try R = {suggested}")]
    Truncation { suggested: f64 },
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("extrapolation error: {0}")]
    Extrapolation(String),
    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

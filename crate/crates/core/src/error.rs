use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),
    #[error("invalid bias vector: {0}")]
    InvalidBias(String),
    #[error("CL requires ordered bias")]
    UnorderedBias,
    #[error("bisection does not bracket a root on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("closed-form linear system singular (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("optimization diverged at epoch {epoch}: risk = {risk}")]
    Diverged { epoch: usize, risk: f64 },
    #[error("unknown name: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation too small: {what} has {got} levels, need at least {min}")]
    Truncation {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} ns outside pulse window [0, {duration}] ns")]
    OutOfWindow { t: f64, duration: f64 },

    #[error("numerical failure: {0}")]
    NonConvergent(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("channel is not trace preserving: max deviation {0:e}")]
    NotCptp(f64),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown result schema: {0}")]
    UnknownSchema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

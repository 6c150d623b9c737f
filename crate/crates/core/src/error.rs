use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A raw link event violates the stream invariants.
    #[error("invalid event #{index}: {reason}")]
    InvalidEvent { index: usize, reason: String },

    #[error("time {t} is outside the time domain [0, {t_max}]")]
    OutOfDomain { t: f64, t_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("kernel store format: {0}")]
    StoreFormat(String),

    /// Floating-point results left the tolerance budget (negative kernel mass,
    /// bad eigen residual, ...).
    #[error("numerical integrity: {0}")]
    Numerical(String),

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

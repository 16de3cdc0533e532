use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("range is zero: aircraft coincides with the radar")]
    ZeroRange,

    #[error("radar lies on the body z axis; RCS azimuth is undefined")]
    NadirSingularity,

    #[error("degenerate RCS model: {0}")]
    DegenerateModel(String),

    #[error("probability of false alarm {0} is outside (0, 1)")]
    InvalidPfa(f64),

    #[error("signal-to-noise ratio {0} is negative")]
    InvalidSnr(f64),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("variance {0} is negative beyond round-off")]
    NegativeVariance(f64),

    #[error("index {index} out of range for sweep of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("need at least {needed} samples, have {actual}")]
    InsufficientSamples { needed: usize, actual: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

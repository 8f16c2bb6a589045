use thiserror::Error;

/// Errors surfaced by every module of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    /// The integrator produced a non-finite value; `t` is the last time with a finite state.
    #[error("blow-up reached (last finite time t = {t})")]
    BlowupReached { t: f64 },

    #[error("no blow-up detected: {0}")]
    NoBlowupDetected(String),

    #[error("frame error: {0}")]
    Frame(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("tuning failure: {0}")]
    Tuning(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Config(msg.into()))
}

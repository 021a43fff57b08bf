use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("horizon exceeded: {0}")]
    Horizon(String),
    #[error("support guard: {0}")]
    Support(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("invalid polynomial: {0}")]
    Poly(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable kind, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Param(_) => "param",
            Error::Horizon(_) => "horizon",
            Error::Support(_) => "support",
            Error::Overflow(_) => "overflow",
            Error::Poly(_) => "poly",
            Error::Input(_) => "input",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

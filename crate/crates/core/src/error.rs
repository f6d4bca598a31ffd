use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular consistency system: |beta + eps*gamma| = {0:e}")]
    Singular(f64),
    #[error("inadmissible point: {0}")]
    Inadmissible(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("periodic extension failed: {0}")]
    Extension(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Format(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

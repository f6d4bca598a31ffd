use thiserror::Error;

/// Failures of a command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] gavriflow::Error),
}

impl CliError {
    /// 2 for bad input, 1 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

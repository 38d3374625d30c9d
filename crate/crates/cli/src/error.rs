use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] advreg::Error),
    /// Output was written but some fit missed its tolerance.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    /// 1 for solver trouble, 2 for I/O and validation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged(_) | CliError::Core(advreg::Error::Numerical(_)) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

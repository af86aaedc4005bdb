use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(exitgrid_core::Error),
    #[error("tolerance check failed: {0}")]
    CheckFailed(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<exitgrid_core::Error> for CliError {
    fn from(e: exitgrid_core::Error) -> Self {
        use exitgrid_core::Error as E;
        match e {
            E::InvalidParams(m) | E::InvalidDomain(m) => CliError::Config(m),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    /// 2 for configuration and output problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Numerical(_) | CliError::CheckFailed(_) => 3,
        }
    }
}

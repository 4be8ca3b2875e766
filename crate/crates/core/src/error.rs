use thiserror::Error;

pub type Result<T> = std::result::Result<T, GrtError>;

#[derive(Debug, Error)]
pub enum GrtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of coverage: {0}")]
    OutOfCoverage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl GrtError {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// coverage and domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            GrtError::Config(_) | GrtError::InvalidArgument(_) | GrtError::Io(_) => 2,
            GrtError::Domain(_) | GrtError::OutOfCoverage(_) | GrtError::Numeric(_) => 3,
        }
    }
}

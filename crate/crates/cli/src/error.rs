use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    /// Malformed matrix file, config file, or flag combination.
    Format(String),
    Core(ozmm_core::Error),
    ToleranceExceeded { max_rel_err: f64, tol: f64 },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Format(msg) => write!(f, "format error: {msg}"),
            CliError::Core(e) => write!(f, "pipeline error: {e}"),
            CliError::ToleranceExceeded { max_rel_err, tol } => {
                write!(f, "max relative error {max_rel_err:e} exceeds tolerance {tol:e}")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ozmm_core::Error> for CliError {
    fn from(e: ozmm_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

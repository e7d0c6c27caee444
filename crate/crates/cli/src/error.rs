use contclust_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{0}")]
    Invalid(Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(Error),
}

impl CliError {
    /// 1 for unreadable or invalid input, 2 for certified infeasibility, 3
    /// when an enumeration or cut budget runs out, 4 for internal failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) | CliError::Io { .. } | CliError::Usage(_) => 1,
            CliError::Solver(e) => match e {
                Error::InvalidInstance(_) | Error::InvalidSpec(_) | Error::AllCoincident => 1,
                Error::Infeasible => 2,
                Error::TooLarge { .. } | Error::CutLimitExceeded { .. } => 3,
                _ => 4,
            },
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

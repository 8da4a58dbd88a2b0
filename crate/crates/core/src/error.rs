use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("positivity violated at t = {t} us (min eigenvalue {min_eig:e})")]
    Positivity { t: f64, min_eig: f64 },

    #[error("Fock truncation guard tripped at t = {t} us (top-level population {population:e})")]
    Truncation { t: f64, population: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("worker failure in trajectories {start}..{end}: {source}")]
    Worker {
        start: usize,
        end: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.to_string(), reason: reason.into() }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 1,
            Error::Io(_) | Error::Serialization(_) => 3,
            Error::Worker { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

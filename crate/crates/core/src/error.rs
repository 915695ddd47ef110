use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("predicted ball size {predicted} exceeds the capacity limit {limit}")]
    Capacity { predicted: u64, limit: u64 },

    #[error("numeric divergence: {0}")]
    Divergence(String),

    #[error("asymptotic fit failed: {0}")]
    FitFailure(String),

    #[error("degenerate sample span: {0}")]
    DegenerateSpan(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error: 2 config, 3 capacity, 4 numeric divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::NotPrime(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Divergence(_) | Error::FitFailure(_) | Error::DegenerateSpan(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

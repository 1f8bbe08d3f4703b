use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad input: {0}")]
    BadInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid probability data: {0}")]
    InvalidProbability(String),

    #[error("{what} needs {needed} but the cap is {cap}")]
    CapExceeded { what: String, needed: u64, cap: u64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn cap(what: impl Into<String>, needed: u64, cap: u64) -> Self {
        Error::CapExceeded { what: what.into(), needed, cap }
    }

    /// Process exit code for the CLI: 2 bad input, 3 cap exceeded, 4 solver trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BadInput(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidProbability(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::CapExceeded { .. } => 3,
            Error::SolverFailure(_) | Error::NonConvergence(_) => 4,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("observable requires a single-excitation sector, got q = {0}")]
    WrongSector(usize),

    #[error("state invariant violated at t = {time}: {detail}")]
    InvariantViolation { time: f64, detail: String },

    #[error("trajectory {index} (master seed {master_seed}) failed: {source}")]
    Trajectory {
        index: u64,
        master_seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArguments(msg.into())
    }
}

//! Error type shared across the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix that must be symmetric positive definite failed to factor,
    /// even after the diagonal-jitter retries.
    #[error("matrix of dimension {dim} is not positive definite (jitter up to {max_jitter:e} tried): {context}")]
    NotPositiveDefinite {
        dim: usize,
        max_jitter: f64,
        context: String,
    },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:e} exceeds tolerance {tol:e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn dim_mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config/data, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Data(_) | Error::InvalidArgument(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}

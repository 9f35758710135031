use std::path::PathBuf;

/// Errors raised by the samplers, estimators and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: u64, max: u64 },

    #[error("tail family {0} has infinite mean")]
    InfiniteMean(String),

    #[error("tail exhausted: f({0}) = 0")]
    TailExhausted(u64),

    #[error("cannot parse tail family {0:?} (expected const:<c>, geom:<q>, logpow:<b>, pow:<p> or slowlog)")]
    TailSyntax(String),

    #[error("configuration truncated at z = {z} but lattice size {n} needs z <= 1/n")]
    TruncationMismatch { z: f64, n: u64 },

    #[error("only {accepted} accepted samples, need at least {required}")]
    InsufficientAcceptances { accepted: usize, required: usize },

    #[error("sequence is not non-increasing at index {0}")]
    NonMonotone(u64),

    #[error("run aborted after {0} arcs without covering the torus")]
    ArcCapExceeded(u64),

    #[error("population {0} exceeds the runaway cap")]
    PopulationCap(u64),

    #[error("malformed configuration text at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("incompatible experiment setup: {0}")]
    Incompatible(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config file: {0}")]
    Config(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command-line tool: 2 for invalid input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Json(_)
            | Error::ArcCapExceeded(_)
            | Error::PopulationCap(_)
            | Error::InsufficientAcceptances { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

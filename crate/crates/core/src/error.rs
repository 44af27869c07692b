use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at token {index}: {message}")]
    Parse { index: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("record {record_id}: {message}")]
    Record { record_id: u64, message: String },

    #[error("cannot serialize token {index} ({token:?}): {message}")]
    Serialize {
        index: usize,
        token: String,
        message: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("noised sequence carries no origin for position {0}")]
    MissingOrigin(usize),

    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },

    #[error("protocol violation from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },

    #[error("service returned the mask sentinel at output position {position}")]
    SentinelInOutput { position: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 input, 2 remote service, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Transport { .. } | Error::Protocol { .. } | Error::SentinelInOutput { .. } => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }

    pub fn is_remote(&self) -> bool {
        self.exit_code() == 2
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

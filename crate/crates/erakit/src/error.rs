use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] erakit_core::Error),

    #[error("{}: {source}", path.display())]
    Clip {
        path: PathBuf,
        #[source]
        source: erakit_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: missing required column {0:?}")]
    MissingColumn(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("conflicting entries for {0}")]
    Conflict(String),

    #[error("no entries found")]
    NoEntries,

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 usage, 3 data, 4 insufficient data.
    pub fn exit_code(&self) -> i32 {
        use erakit_core::Error as E;
        match self {
            Error::Usage(_)
            | Error::Core(E::Config(_))
            | Error::Clip {
                source: E::Config(_),
                ..
            } => 2,
            Error::Core(E::InsufficientData(_))
            | Error::Clip {
                source: E::InsufficientData(_),
                ..
            } => 4,
            _ => 3,
        }
    }
}

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error (expected version {expected}, found {found}): {detail}")]
    Schema {
        expected: u32,
        found: u32,
        detail: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown scene: {0}")]
    UnknownScene(String),

    #[error("verification error: {0}")]
    Verification(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 success, 2 config error, 3 data error, 4 schema/version error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Data(_) | Error::UnknownScene(_) => 3,
            Error::Schema { .. } => 4,
            Error::Contract(_) | Error::Verification(_) | Error::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

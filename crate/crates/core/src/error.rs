use thiserror::Error;

/// Errors raised by the scoring and scheduling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A raw value fell outside the interval it is mapped from, or the
    /// target interval was empty.
    #[error("range error: {0}")]
    Range(String),

    /// A group was recorded twice for the same datum and epoch.
    #[error("duplicate epoch {epoch} for datum `{datum_id}`")]
    DuplicateEpoch { datum_id: String, epoch: u32 },

    /// A group arrived with an epoch older than one already recorded.
    #[error("epoch {epoch} for datum `{datum_id}` is older than recorded epoch {last}")]
    EpochOutOfOrder {
        datum_id: String,
        epoch: u32,
        last: u32,
    },

    /// Statistics were requested from a tracker with no recorded groups.
    #[error("history is empty")]
    EmptyHistory,

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Input data that does not follow the expected record schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

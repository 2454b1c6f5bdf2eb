use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset has no rows")]
    EmptyData,

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid SCM specification: {0}")]
    InvalidSpec(String),

    #[error("unsupported SCM for this method: {0}")]
    UnsupportedSpec(String),

    #[error("conditioning event has zero probability: {0}")]
    Conditioning(String),

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error blocks.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::EmptyData => "empty-data",
            Error::Positivity(_) => "positivity",
            Error::InvalidEvidence(_) => "invalid-evidence",
            Error::InvalidQuery(_) => "invalid-query",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::UnsupportedSpec(_) => "unsupported-spec",
            Error::Conditioning(_) => "conditioning",
            Error::Bootstrap(_) => "bootstrap-failure",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn positivity(msg: impl Into<String>) -> Self {
        Error::Positivity(msg.into())
    }
}

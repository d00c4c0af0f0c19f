use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("unknown language {code:?}; valid codes: {valid}")]
    UnknownLanguage { code: String, valid: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing score input for ({query_id}, {language}, {index})")]
    MissingScoreInput {
        query_id: String,
        language: String,
        index: u32,
    },

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("empty response pool")]
    EmptyPool,

    #[error("insufficient responses: have {have}, need at least {need}")]
    InsufficientResponses { have: usize, need: usize },

    #[error("nothing to sample: every bucket is empty or has zero weight")]
    NothingToSample,

    #[error("token {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed tag `{0}`")]
    MalformedTag(String),

    #[error("invalid token `{0}`")]
    InvalidToken(String),

    #[error("tag sequence has {tags} tags but the sentence has {tokens} tokens")]
    LengthMismatch { tags: usize, tokens: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty dev set")]
    EmptyDevSet,

    #[error("corpus contains no words")]
    NoWords,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid model file: {0}")]
    InvalidModel(String),

    #[error("invalid lexicon line {line}: {reason}")]
    InvalidLexicon { line: usize, reason: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("peer unavailable: {0}")]
    PeerUnavailable(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures that originate in a tagger backend or its transport.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::Protocol(_) | Error::PeerUnavailable(_) | Error::InvariantViolation(_)
        )
    }
}

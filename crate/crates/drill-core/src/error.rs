use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("graph is disconnected: {0}")]
    Disconnected(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("relator {index} not killed by homomorphism (image {image})")]
    RelatorNotKilled { index: usize, image: i64 },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("truncation too small: {0}")]
    Truncation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn pre(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

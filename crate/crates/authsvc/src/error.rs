use thiserror::Error;
use uuid::Uuid;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("authentication failed")]
    Auth,
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
    /// Answer for a stale challenge or a session that is no longer open.
    #[error("session {session_id}: {message}")]
    Session { session_id: Uuid, message: String },
    #[error("invalid answer: {0}")]
    InvalidAnswer(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] egoauth_core::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

use fedring_crypto::{CryptoError, Level};
use fedring_flcore::FlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IncentiveError {
    #[error("model has input {model_input}/classes {model_classes}, oracle set has {data_input}/{data_classes}")]
    ArchMismatch {
        model_input: usize,
        model_classes: usize,
        data_input: usize,
        data_classes: usize,
    },
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("user {0} already registered")]
    DuplicateUser(String),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("user {user} (level {held}) may not access level {requested}")]
    Denied {
        user: String,
        held: String,
        requested: Level,
    },
    #[error("invalid incentive config: {0}")]
    Config(String),
    #[error("ledger line {line}: {detail}")]
    Ledger { line: usize, detail: String },
    #[error("blob {0} does not match its content hash")]
    BlobCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Model(#[from] FlError),
}

pub type Result<T, E = IncentiveError> = std::result::Result<T, E>;

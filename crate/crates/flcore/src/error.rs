use fedring_crypto::CryptoError;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model has {got} parameters, architecture expects {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("feature width {got} does not match model input width {expected}")]
    FeatureWidth { expected: usize, got: usize },
    #[error("label {label} at row {row} is not below {classes}")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },
    #[error("{rows} feature rows but {labels} labels")]
    RowMismatch { rows: usize, labels: usize },
    #[error("update {index} has length {got}, expected {expected}")]
    LengthMismatch { index: usize, expected: usize, got: usize },
    #[error("aggregation needs at least one update")]
    NoUpdates,
    #[error("architecture needs at least an input and an output layer, all widths positive")]
    InvalidArch,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(&'static str),
    #[error("malformed model encoding: {0}")]
    Encoding(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

pub type Result<T, E = FlError> = std::result::Result<T, E>;

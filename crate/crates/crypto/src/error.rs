use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CryptoError {
    #[error("ring must contain at least 2 public keys, got {0}")]
    RingTooSmall(usize),
    #[error("signer index {index} out of range for ring of size {size}")]
    SignerIndexOutOfRange { index: usize, size: usize },
    #[error("secret key does not match ring entry {0}")]
    SignerKeyMismatch(usize),
    #[error("parameter {index} = {value} exceeds the magnitude bound {bound}")]
    OutOfBound { index: usize, value: f64, bound: f64 },
    #[error("parameter {index} is not finite")]
    NonFinite { index: usize },
    #[error("encoded value at index {0} lies outside the signed window")]
    Overflow(usize),
    #[error("invalid quantization parameters: {0}")]
    InvalidScale(String),
    #[error("commitment chunk counts differ: {0} vs {1}")]
    ChunkMismatch(usize, usize),
    #[error("cannot combine an empty list of commitments")]
    EmptyCombine,
    #[error("level {requested} is above the holder's level {held}")]
    Unauthorized { held: char, requested: char },
    #[error("authentication failed")]
    Authentication,
    #[error("malformed encoding: {0}")]
    Encoding(&'static str),
    #[error("plaintext is not smaller than the Paillier modulus")]
    PlaintextTooLarge,
    #[error("Paillier modulus must be at least {min} bits, got {got}")]
    ModulusTooSmall { min: usize, got: usize },
}

pub type Result<T, E = CryptoError> = std::result::Result<T, E>;

//! Cryptographic building blocks for verifiable, anonymous federated averaging.
//!
//! * [`ring`]: AOS ring signatures over Ristretto255, used to sign the
//!   digest of each uploaded parameter vector.
//! * [`hhash`]: the additively homomorphic vector hash used to check the
//!   server's aggregate.
//! * [`quant`]: fixed-point encoding of real parameters into the scalar field.
//! * [`levels`]: the A–D key chain and per-user key wrapping for the model market.
//! * [`paillier`]: the per-element encryption baseline used in benchmarks.

pub mod error;
pub mod group;
pub mod hhash;
pub mod levels;
pub mod paillier;
pub mod quant;
pub mod ring;

pub use error::{CryptoError, Result};
pub use group::{keygen, GroupParams, KeyPair, PublicKey, DEFAULT_CHUNK_WIDTH};
pub use hhash::{hh_combine, hh_commit, hh_verify_sum, HashCommitment};
pub use levels::{
    decrypt_model, decrypt_model_with, derive_level_key, encrypt_model, Level, LevelKey, ModelCiphertext,
    UserCredential, UserSecretKey,
};
pub use paillier::{paillier_encrypt_bench, PaillierBench, PaillierKey, PaillierPublicKey};
pub use quant::{digest_params, FixedPoint, QuantizedParams, DEFAULT_BOUND, DEFAULT_SCALE};
pub use ring::{ring_sign, ring_verify, RingSignature};

pub use curve25519_dalek::scalar::Scalar;

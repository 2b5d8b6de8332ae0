//! Leveled model keys.
//!
//! Level keys form a one-way chain `A → B → C → D`, so the holder of a level
//! key can derive every lower one but none above. Users never receive a raw
//! level key: the center wraps it under a per-user key derived from the
//! master key and the user id.

use crate::error::{CryptoError, Result};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use std::fmt;
use std::str::FromStr;

const NONCE_LEN: usize = 12;

/// Access level, ordered so that `A > B > C > D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    A,
    B,
    C,
    D,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::A, Level::B, Level::C, Level::D];

    /// 0 for D up to 3 for A.
    pub fn rank(self) -> u8 {
        match self {
            Level::A => 3,
            Level::B => 2,
            Level::C => 1,
            Level::D => 0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Level::A => 'A',
            Level::B => 'B',
            Level::C => 'C',
            Level::D => 'D',
        }
    }

    /// The next level down, `None` below D.
    pub fn below(self) -> Option<Level> {
        match self {
            Level::A => Some(Level::B),
            Level::B => Some(Level::C),
            Level::C => Some(Level::D),
            Level::D => None,
        }
    }

    /// True when a holder of `self` may open content at `other`.
    pub fn dominates(self, other: Level) -> bool {
        self.rank() >= other.rank()
    }

    pub fn to_byte(self) -> u8 {
        self.as_char() as u8
    }

    pub fn from_byte(b: u8) -> Option<Level> {
        match b {
            b'A' => Some(Level::A),
            b'B' => Some(Level::B),
            b'C' => Some(Level::C),
            b'D' => Some(Level::D),
            _ => None,
        }
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Level {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Level::A),
            "B" | "b" => Ok(Level::B),
            "C" | "c" => Ok(Level::C),
            "D" | "d" => Ok(Level::D),
            _ => Err(CryptoError::Encoding("unknown level")),
        }
    }
}

fn kdf(ikm: &[u8; 32], info: &[&[u8]]) -> [u8; 32] {
    let hk = Hkdf::<Sha256>::new(Some(b"fedring/levels/v1"), ikm);
    let info: Vec<u8> = info.concat();
    let mut out = [0u8; 32];
    hk.expand(&info, &mut out).expect("32 bytes is a valid HKDF-SHA256 length");
    out
}

#[derive(Clone, PartialEq, Eq)]
pub struct LevelKey {
    level: Level,
    key: [u8; 32],
}

impl fmt::Debug for LevelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelKey").field("level", &self.level).finish_non_exhaustive()
    }
}

impl LevelKey {
    pub fn new(level: Level, key: [u8; 32]) -> Self {
        Self { level, key }
    }

    /// Fresh random top-level (A) key.
    pub fn generate_master<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self { level: Level::A, key }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn key_bytes(&self) -> &[u8; 32] {
        &self.key
    }

    fn step_down(&self) -> Option<LevelKey> {
        let next = self.level.below()?;
        Some(LevelKey {
            level: next,
            key: kdf(&self.key, &[b"level:", &[next.to_byte()]]),
        })
    }
}

/// Walks the chain from `top` down to `target`.
pub fn derive_level_key(top: &LevelKey, target: Level) -> Result<LevelKey> {
    if !top.level.dominates(target) {
        return Err(CryptoError::Unauthorized {
            held: top.level.as_char(),
            requested: target.as_char(),
        });
    }
    let mut key = top.clone();
    while key.level != target {
        key = key.step_down().expect("target is at or below D");
    }
    Ok(key)
}

/// Authenticated ciphertext of a model blob under a level key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCiphertext {
    level: Level,
    nonce: [u8; NONCE_LEN],
    body: Vec<u8>,
}

impl ModelCiphertext {
    pub fn level(&self) -> Level {
        self.level
    }

    /// `level byte ‖ 12-byte nonce ‖ ciphertext with 16-byte tag`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + NONCE_LEN + self.body.len());
        out.push(self.level.to_byte());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 1 + NONCE_LEN + 16 {
            return Err(CryptoError::Encoding("model ciphertext truncated"));
        }
        let level = Level::from_byte(bytes[0]).ok_or(CryptoError::Encoding("unknown level tag"))?;
        Ok(Self {
            level,
            nonce: bytes[1..1 + NONCE_LEN].try_into().unwrap(),
            body: bytes[1 + NONCE_LEN..].to_vec(),
        })
    }
}

fn seal<R: RngCore + CryptoRng>(key: &[u8; 32], aad: &[u8], msg: &[u8], rng: &mut R) -> ([u8; NONCE_LEN], Vec<u8>) {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg, aad })
        .expect("ChaCha20-Poly1305 encryption does not fail for in-memory buffers");
    (nonce, body)
}

fn open(key: &[u8; 32], aad: &[u8], nonce: &[u8; NONCE_LEN], body: &[u8]) -> Result<Vec<u8>> {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    cipher
        .decrypt(Nonce::from_slice(nonce), Payload { msg: body, aad })
        .map_err(|_| CryptoError::Authentication)
}

pub fn encrypt_model<R: RngCore + CryptoRng>(model: &[u8], key: &LevelKey, rng: &mut R) -> ModelCiphertext {
    let aad = [key.level.to_byte()];
    let (nonce, body) = seal(&key.key, &aad, model, rng);
    ModelCiphertext {
        level: key.level,
        nonce,
        body,
    }
}

/// Fails with [`CryptoError::Authentication`] for any key other than the
/// one the blob was sealed under.
pub fn decrypt_model(ct: &ModelCiphertext, key: &LevelKey) -> Result<Vec<u8>> {
    let aad = [ct.level.to_byte()];
    open(&key.key, &aad, &ct.nonce, &ct.body)
}

/// Opens `ct` with any key at or above its level, deriving down as needed.
pub fn decrypt_model_with(ct: &ModelCiphertext, held: &LevelKey) -> Result<Vec<u8>> {
    let key = derive_level_key(held, ct.level)?;
    decrypt_model(ct, &key)
}

/// Per-user unwrapping secret `KDF(master, user id)`, handed to a user once
/// at registration.
#[derive(Clone, PartialEq, Eq)]
pub struct UserCredential {
    user_id: String,
    key: [u8; 32],
}

impl fmt::Debug for UserCredential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserCredential").field("user_id", &self.user_id).finish_non_exhaustive()
    }
}

impl UserCredential {
    pub fn derive(master: &LevelKey, user_id: &str) -> Self {
        Self {
            user_id: user_id.to_string(),
            key: kdf(&master.key, &[b"user:", user_id.as_bytes()]),
        }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }
}

/// A level key wrapped for one user. Two grants of the same level differ in
/// bytes (user-specific wrapping key, fresh nonce) yet unwrap to the same key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSecretKey {
    user_id: String,
    level: Level,
    nonce: [u8; NONCE_LEN],
    wrapped: Vec<u8>,
}

impl UserSecretKey {
    pub fn wrap<R: RngCore + CryptoRng>(master: &LevelKey, user_id: &str, level_key: &LevelKey, rng: &mut R) -> Self {
        let cred = UserCredential::derive(master, user_id);
        let aad = Self::aad(user_id, level_key.level);
        let (nonce, wrapped) = seal(&cred.key, &aad, &level_key.key, rng);
        Self {
            user_id: user_id.to_string(),
            level: level_key.level,
            nonce,
            wrapped,
        }
    }

    fn aad(user_id: &str, level: Level) -> Vec<u8> {
        let mut aad = Vec::with_capacity(user_id.len() + 1);
        aad.push(level.to_byte());
        aad.extend_from_slice(user_id.as_bytes());
        aad
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn unwrap_key(&self, cred: &UserCredential) -> Result<LevelKey> {
        if cred.user_id != self.user_id {
            return Err(CryptoError::Authentication);
        }
        let raw = open(&cred.key, &Self::aad(&self.user_id, self.level), &self.nonce, &self.wrapped)?;
        let key: [u8; 32] = raw.try_into().map_err(|_| CryptoError::Authentication)?;
        Ok(LevelKey::new(self.level, key))
    }

    /// `level byte ‖ id len u16 LE ‖ id ‖ nonce ‖ wrapped`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.level.to_byte()];
        out.extend_from_slice(&(self.user_id.len() as u16).to_le_bytes());
        out.extend_from_slice(self.user_id.as_bytes());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.wrapped);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = CryptoError::Encoding("user secret key truncated");
        if bytes.len() < 3 {
            return Err(err);
        }
        let level = Level::from_byte(bytes[0]).ok_or(CryptoError::Encoding("unknown level tag"))?;
        let id_len = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
        let rest = &bytes[3..];
        if rest.len() < id_len + NONCE_LEN {
            return Err(err);
        }
        let user_id = std::str::from_utf8(&rest[..id_len])
            .map_err(|_| CryptoError::Encoding("user id is not UTF-8"))?
            .to_string();
        Ok(Self {
            user_id,
            level,
            nonce: rest[id_len..id_len + NONCE_LEN].try_into().unwrap(),
            wrapped: rest[id_len + NONCE_LEN..].to_vec(),
        })
    }
}

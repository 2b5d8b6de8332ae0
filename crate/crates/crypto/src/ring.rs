//! Challenge-chained Schnorr ring signatures (AOS construction).
//!
//! For a ring `P_0..P_{r-1}` and message `m`, the challenges form a closed
//! loop `c_{i+1} = H(ring ‖ m ‖ s_i·G + c_i·P_i)` with `c_r = c_0`. Only the
//! holder of one ring secret can close the loop; the signature is
//! `(c_0, s_0..s_{r-1})` and carries no signer index.

use crate::error::{CryptoError, Result};
use crate::group::{scalar_from_bytes, GroupParams, KeyPair, PublicKey};
use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

const RING_LABEL: &[u8] = b"fedring/aos-ring/v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSignature {
    seed_challenge: Scalar,
    responses: Vec<Scalar>,
}

impl RingSignature {
    pub fn ring_size(&self) -> usize {
        self.responses.len()
    }

    pub fn seed_challenge(&self) -> &Scalar {
        &self.seed_challenge
    }

    pub fn responses(&self) -> &[Scalar] {
        &self.responses
    }

    /// Encoded length for a ring of `ring_size` members.
    pub fn encoded_len_for(ring_size: usize) -> usize {
        4 + 32 * (ring_size + 1)
    }

    /// `ring size u32 LE ‖ c_0 ‖ s_0 ‖ … ‖ s_{r-1}`, 32-byte LE scalars.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len_for(self.ring_size()));
        self.write_to(&mut out);
        out
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.responses.len() as u32).to_le_bytes());
        out.extend_from_slice(self.seed_challenge.as_bytes());
        for s in &self.responses {
            out.extend_from_slice(s.as_bytes());
        }
    }

    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 4 {
            return Err(CryptoError::Encoding("signature header truncated"));
        }
        let r = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let total = Self::encoded_len_for(r);
        if bytes.len() < total {
            return Err(CryptoError::Encoding("signature body truncated"));
        }
        let mut scalars = bytes[4..total]
            .chunks_exact(32)
            .map(|c| scalar_from_bytes(c).ok_or(CryptoError::Encoding("non-canonical scalar")));
        let seed_challenge = scalars.next().unwrap()?;
        let responses = scalars.collect::<Result<Vec<_>>>()?;
        Ok((
            Self {
                seed_challenge,
                responses,
            },
            total,
        ))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (sig, used) = Self::read_from(bytes)?;
        if used != bytes.len() {
            return Err(CryptoError::Encoding("trailing bytes after signature"));
        }
        Ok(sig)
    }
}

/// Hash state absorbing the ring and message once; cloned per challenge.
fn transcript(ring: &[PublicKey], digest: &[u8; 32]) -> Sha512 {
    let mut h = Sha512::new();
    h.update(RING_LABEL);
    h.update((ring.len() as u64).to_le_bytes());
    for pk in ring {
        h.update(pk.as_bytes());
    }
    h.update(digest);
    h
}

fn challenge(prefix: &Sha512, commitment: &RistrettoPoint) -> Scalar {
    let mut h = prefix.clone();
    h.update(commitment.compress().as_bytes());
    Scalar::from_hash(h)
}

/// Signs `digest` on behalf of `ring`, using the secret of `ring[signer_index]`.
pub fn ring_sign<R: RngCore + CryptoRng>(
    group: &GroupParams,
    digest: &[u8; 32],
    ring: &[PublicKey],
    signer_index: usize,
    signer: &KeyPair,
    rng: &mut R,
) -> Result<RingSignature> {
    let r = ring.len();
    if r < 2 {
        return Err(CryptoError::RingTooSmall(r));
    }
    if signer_index >= r {
        return Err(CryptoError::SignerIndexOutOfRange {
            index: signer_index,
            size: r,
        });
    }
    if ring[signer_index] != *signer.public() {
        return Err(CryptoError::SignerKeyMismatch(signer_index));
    }

    let prefix = transcript(ring, digest);
    let mut responses = vec![Scalar::ZERO; r];
    let mut challenges = vec![Scalar::ZERO; r];

    let alpha = Scalar::random(rng);
    let mut idx = (signer_index + 1) % r;
    challenges[idx] = challenge(&prefix, &(alpha * group.generator()));
    while idx != signer_index {
        let s = Scalar::random(rng);
        responses[idx] = s;
        let point = RistrettoPoint::vartime_double_scalar_mul_basepoint(
            &challenges[idx],
            ring[idx].point(),
            &s,
        );
        let next = (idx + 1) % r;
        challenges[next] = challenge(&prefix, &point);
        idx = next;
    }
    responses[signer_index] = alpha - challenges[signer_index] * signer.secret();

    Ok(RingSignature {
        seed_challenge: challenges[0],
        responses,
    })
}

/// Checks that the challenge loop closes. Malformed input yields `false`.
pub fn ring_verify(_group: &GroupParams, digest: &[u8; 32], ring: &[PublicKey], sig: &RingSignature) -> bool {
    if ring.len() < 2 || sig.responses.len() != ring.len() {
        return false;
    }
    let prefix = transcript(ring, digest);
    let mut c = sig.seed_challenge;
    for (pk, s) in ring.iter().zip(&sig.responses) {
        let point = RistrettoPoint::vartime_double_scalar_mul_basepoint(&c, pk.point(), s);
        c = challenge(&prefix, &point);
    }
    c == sig.seed_challenge
}

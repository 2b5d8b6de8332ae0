use fedring_crypto::{digest_params, HashCommitment, PublicKey, QuantizedParams, RingSignature};
use rand::RngCore;
use std::fmt;

/// Round-scoped random tag that lets peers match commitments to uploads
/// without learning who sent them.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pseudonym(pub [u8; 16]);

impl Pseudonym {
    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        Self(b)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let v = hex::decode(s).ok()?;
        Some(Self(v.try_into().ok()?))
    }
}

impl fmt::Debug for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pseudonym({})", self.to_hex())
    }
}

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Anonymous upload: parameters, ring signature over their digest, the ring
/// itself and a fresh pseudonym. Nothing here names the sender.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedUpdate {
    pub round: u64,
    pub pseudonym: Pseudonym,
    pub params: QuantizedParams,
    pub ring: Vec<PublicKey>,
    pub signature: RingSignature,
}

impl SignedUpdate {
    pub fn digest(&self) -> [u8; 32] {
        digest_params(&self.params, self.round)
    }
}

/// A hash commitment multicast over the anonymous channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentEntry {
    pub round: u64,
    pub pseudonym: Pseudonym,
    pub commitment: HashCommitment,
}

/// The server's aggregate: exact sum, participant count and the pseudonyms it
/// included, so clients check the hash sum over exactly that set.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSum {
    pub round: u64,
    pub count: u32,
    pub included: Vec<Pseudonym>,
    pub sum: QuantizedParams,
}

//! Prime-order group setup shared by every primitive in this crate.
//!
//! The group is Ristretto255 (order `q = 2^252 + 27742317777372353535851937790883648493`).
//! Vector-hash generators are derived by hash-to-group from domain-separated
//! labels, so nobody knows a discrete-log relation between any two of them.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint, VartimeRistrettoPrecomputation};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::VartimePrecomputedMultiscalarMul;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};
use std::fmt;

/// Default number of independent generators (chunk width of the vector hash).
pub const DEFAULT_CHUNK_WIDTH: usize = 256;

const GENERATOR_LABEL: &[u8] = b"fedring/vector-hash/generator/v1";
const SCALAR_LABEL: &[u8] = b"fedring/hash-to-scalar/v1";

/// Public system parameters: generator `g`, vector generators `g_1..g_m`
/// and the hash-to-scalar function (SHA-512 with a fixed domain label).
pub struct GroupParams {
    generator: RistrettoPoint,
    vector_generators: Vec<RistrettoPoint>,
    table: VartimeRistrettoPrecomputation,
    comb: Vec<RistrettoPoint>,
}

/// Signed radix-256 digits per short value; covers `|v| < 2^30`.
const COMB_WINDOWS: usize = 4;
const COMB_ENTRIES: usize = 128;
pub(crate) const COMB_LIMIT: u64 = 1 << 30;

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("chunk_width", &self.chunk_width())
            .finish()
    }
}

impl Default for GroupParams {
    fn default() -> Self {
        Self::new(DEFAULT_CHUNK_WIDTH)
    }
}

impl GroupParams {
    /// Builds parameters with `chunk_width` vector generators.
    ///
    /// Panics if `chunk_width` is zero.
    pub fn new(chunk_width: usize) -> Self {
        assert!(chunk_width > 0, "chunk width must be positive");
        let vector_generators: Vec<RistrettoPoint> = (0..chunk_width as u64)
            .map(|j| {
                let mut input = Vec::with_capacity(GENERATOR_LABEL.len() + 8);
                input.extend_from_slice(GENERATOR_LABEL);
                input.extend_from_slice(&j.to_le_bytes());
                RistrettoPoint::hash_from_bytes::<Sha512>(&input)
            })
            .collect();
        let table = VartimeRistrettoPrecomputation::new(vector_generators.iter());
        let comb = build_comb(&vector_generators);
        Self {
            generator: RISTRETTO_BASEPOINT_POINT,
            vector_generators,
            table,
            comb,
        }
    }

    pub fn generator(&self) -> RistrettoPoint {
        self.generator
    }

    pub fn chunk_width(&self) -> usize {
        self.vector_generators.len()
    }

    /// The `j`-th vector generator (0-based).
    pub fn vector_generator(&self, j: usize) -> RistrettoPoint {
        self.vector_generators[j]
    }

    /// `Σ scalars[j]·g_j` over one full chunk (`scalars.len() == chunk_width`).
    pub(crate) fn chunk_mul(&self, scalars: &[Scalar]) -> RistrettoPoint {
        debug_assert_eq!(scalars.len(), self.chunk_width());
        self.table.vartime_multiscalar_mul(scalars)
    }

    /// Adds `value · g_j` to `acc` using the fixed-base comb; `|value| < 2^30`.
    pub(crate) fn comb_add(&self, acc: &mut RistrettoPoint, j: usize, value: i64) {
        debug_assert!(value.unsigned_abs() < COMB_LIMIT);
        let negative = value < 0;
        let mut mag = value.unsigned_abs() as i64;
        let base = j * COMB_WINDOWS * COMB_ENTRIES;
        for k in 0..COMB_WINDOWS {
            if mag == 0 {
                break;
            }
            let mut d = mag & 0xff;
            mag >>= 8;
            if d >= 128 {
                d -= 256;
                mag += 1;
            }
            if d != 0 {
                let entry = &self.comb[base + k * COMB_ENTRIES + d.unsigned_abs() as usize - 1];
                if (d < 0) != negative {
                    *acc -= entry;
                } else {
                    *acc += entry;
                }
            }
        }
        debug_assert_eq!(mag, 0);
    }

    /// Domain-separated hash of arbitrary byte parts to a scalar mod q.
    pub fn hash_to_scalar(&self, parts: &[&[u8]]) -> Scalar {
        hash_to_scalar(parts)
    }
}

/// `comb[(j·W + k)·E + d − 1] = d · 256^k · g_j` for `d` in `1..=E`.
fn build_comb(generators: &[RistrettoPoint]) -> Vec<RistrettoPoint> {
    let mut comb = Vec::with_capacity(generators.len() * COMB_WINDOWS * COMB_ENTRIES);
    for g in generators {
        let mut window_base = *g;
        for _ in 0..COMB_WINDOWS {
            let mut multiple = window_base;
            for _ in 0..COMB_ENTRIES {
                comb.push(multiple);
                multiple += window_base;
            }
            // 256 · base = 2 · (128 · base)
            window_base = comb[comb.len() - 1] + comb[comb.len() - 1];
        }
    }
    comb
}

pub(crate) fn hash_to_scalar(parts: &[&[u8]]) -> Scalar {
    let mut hasher = Sha512::new();
    hasher.update(SCALAR_LABEL);
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    Scalar::from_hash(hasher)
}

/// A participant key pair `(sk, pk = g^sk)`.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    secret: Scalar,
    public: PublicKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl KeyPair {
    /// Builds a key pair from a known secret. Returns `None` for `sk = 0`.
    pub fn from_secret(group: &GroupParams, secret: Scalar) -> Option<Self> {
        if secret == Scalar::ZERO {
            return None;
        }
        let public = PublicKey::from_point(secret * group.generator());
        Some(Self { secret, public })
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }
}

/// Draws `sk` uniformly from `[1, q-1]` and returns `(sk, g^sk)`.
pub fn keygen<R: RngCore + CryptoRng>(group: &GroupParams, rng: &mut R) -> KeyPair {
    loop {
        let secret = Scalar::random(rng);
        if let Some(kp) = KeyPair::from_secret(group, secret) {
            return kp;
        }
    }
}

/// A public key, kept in both decompressed and compressed form.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PublicKey {
    point: RistrettoPoint,
    compressed: CompressedRistretto,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey(")?;
        for b in &self.compressed.as_bytes()[..6] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

impl PublicKey {
    pub fn from_point(point: RistrettoPoint) -> Self {
        Self {
            point,
            compressed: point.compress(),
        }
    }

    /// Decodes a 32-byte compressed Ristretto point.
    pub fn from_bytes(bytes: &[u8; 32]) -> Option<Self> {
        let compressed = CompressedRistretto(*bytes);
        let point = compressed.decompress()?;
        Some(Self { point, compressed })
    }

    pub fn point(&self) -> &RistrettoPoint {
        &self.point
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.compressed.to_bytes()
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        self.compressed.as_bytes()
    }
}

impl PartialOrd for PublicKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PublicKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_bytes().cmp(other.as_bytes())
    }
}

impl std::hash::Hash for PublicKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.as_bytes().hash(state);
    }
}

/// Decodes a canonical 32-byte little-endian scalar.
pub(crate) fn scalar_from_bytes(bytes: &[u8]) -> Option<Scalar> {
    let arr: [u8; 32] = bytes.try_into().ok()?;
    Option::from(Scalar::from_canonical_bytes(arr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use curve25519_dalek::traits::Identity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn unit_secret_maps_to_generator() {
        let group = GroupParams::new(4);
        let kp = KeyPair::from_secret(&group, Scalar::ONE).unwrap();
        assert_eq!(*kp.public().point(), group.generator());
    }

    #[test]
    fn keygen_is_deterministic_under_seed() {
        let group = GroupParams::new(4);
        let a = keygen(&group, &mut ChaCha20Rng::seed_from_u64(7));
        let b = keygen(&group, &mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let c = keygen(&group, &mut ChaCha20Rng::seed_from_u64(8));
        assert_ne!(a, c);
    }

    #[test]
    fn public_key_recomputes_from_secret() {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..10 {
            let kp = keygen(&group, &mut rng);
            assert_ne!(*kp.secret(), Scalar::ZERO);
            let again = RISTRETTO_BASEPOINT_POINT * kp.secret();
            assert_eq!(again, *kp.public().point());
        }
    }

    #[test]
    fn vector_generators_are_distinct_and_stable() {
        let a = GroupParams::new(16);
        let b = GroupParams::new(16);
        for j in 0..16 {
            assert_eq!(a.vector_generator(j), b.vector_generator(j));
            assert_ne!(a.vector_generator(j), a.generator());
            for k in 0..j {
                assert_ne!(a.vector_generator(j), a.vector_generator(k));
            }
        }
    }

    #[test]
    fn comb_matches_scalar_multiplication() {
        let group = GroupParams::new(3);
        for &v in &[1i64, -1, 127, 128, -128, 255, 256, 65_535, -98_304, (1 << 30) - 1, -((1 << 30) - 1)] {
            for j in 0..3 {
                let mut acc = RistrettoPoint::identity();
                group.comb_add(&mut acc, j, v);
                let s = if v >= 0 { Scalar::from(v as u64) } else { -Scalar::from(v.unsigned_abs()) };
                assert_eq!(acc, s * group.vector_generator(j), "value {v}");
            }
        }
    }

    #[test]
    fn zero_secret_rejected() {
        let group = GroupParams::new(1);
        assert!(KeyPair::from_secret(&group, Scalar::ZERO).is_none());
    }

    #[test]
    fn public_key_bytes_roundtrip() {
        let group = GroupParams::new(1);
        let kp = keygen(&group, &mut ChaCha20Rng::seed_from_u64(3));
        let bytes = kp.public().to_bytes();
        assert_eq!(PublicKey::from_bytes(&bytes).unwrap(), *kp.public());
        assert!(PublicKey::from_bytes(&[0xff; 32]).is_none());
    }
}

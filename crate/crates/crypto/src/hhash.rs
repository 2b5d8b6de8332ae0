//! Additively homomorphic vector hash.
//!
//! A chunk `v_1..v_m` hashes to `Π g_j^{v_j}`. Vectors longer than the chunk
//! width are split into consecutive chunks and the commitment is the ordered
//! tuple of chunk elements; combining commitments multiplies them position by
//! position, so `H(a) · H(b) = H(a + b)` holds for every length.

use crate::error::{CryptoError, Result};
use crate::group::{GroupParams, COMB_LIMIT};
use crate::quant::{scalar_to_signed, QuantizedParams};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashCommitment {
    chunks: Vec<RistrettoPoint>,
}

impl HashCommitment {
    /// Identity commitment spanning `num_chunks` chunks.
    pub fn identity(num_chunks: usize) -> Self {
        Self {
            chunks: vec![RistrettoPoint::identity(); num_chunks],
        }
    }

    pub fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunks(&self) -> &[RistrettoPoint] {
        &self.chunks
    }

    pub fn is_identity(&self) -> bool {
        self.chunks.iter().all(|c| *c == RistrettoPoint::identity())
    }

    /// `chunk count u32 LE ‖ 32-byte compressed points`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out);
        out
    }

    pub fn encoded_len(&self) -> usize {
        4 + 32 * self.chunks.len()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.chunks.len() as u32).to_le_bytes());
        for c in &self.chunks {
            out.extend_from_slice(c.compress().as_bytes());
        }
    }

    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 4 {
            return Err(CryptoError::Encoding("commitment header truncated"));
        }
        let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let total = 4 + 32 * n;
        if bytes.len() < total {
            return Err(CryptoError::Encoding("commitment body truncated"));
        }
        let chunks = bytes[4..total]
            .chunks_exact(32)
            .map(|c| {
                CompressedRistretto::from_slice(c)
                    .ok()
                    .and_then(|c| c.decompress())
                    .ok_or(CryptoError::Encoding("invalid group element"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((Self { chunks }, total))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (c, used) = Self::read_from(bytes)?;
        if used != bytes.len() {
            return Err(CryptoError::Encoding("trailing bytes after commitment"));
        }
        Ok(c)
    }
}

/// Number of chunks a vector of `len` elements occupies (at least one).
pub fn chunk_count(group: &GroupParams, len: usize) -> usize {
    len.div_ceil(group.chunk_width()).max(1)
}

/// Commits to one chunk. Quantized parameters are short signed integers and
/// go through the fixed-base comb; anything else falls back to a generic
/// multiscalar multiplication.
fn commit_chunk(group: &GroupParams, values: &[Scalar]) -> RistrettoPoint {
    let mut acc = RistrettoPoint::identity();
    let mut long: Option<Vec<Scalar>> = None;
    for (j, v) in values.iter().enumerate() {
        match scalar_to_signed(v) {
            Some(x) if x.unsigned_abs() < COMB_LIMIT => group.comb_add(&mut acc, j, x),
            _ => long.get_or_insert_with(|| vec![Scalar::ZERO; group.chunk_width()])[j] = *v,
        }
    }
    if let Some(long) = long {
        acc += group.chunk_mul(&long);
    }
    acc
}

/// `H(qp)`: one multi-base commitment per chunk of width `m`.
pub fn hh_commit(group: &GroupParams, qp: &QuantizedParams) -> HashCommitment {
    let m = group.chunk_width();
    let n = chunk_count(group, qp.len());
    let chunks = (0..n)
        .map(|c| {
            let lo = c * m;
            let hi = ((c + 1) * m).min(qp.len());
            if lo >= hi {
                RistrettoPoint::identity()
            } else {
                commit_chunk(group, &qp.values()[lo..hi])
            }
        })
        .collect();
    HashCommitment { chunks }
}

/// Position-wise group operation over all commitments.
pub fn hh_combine<'a, I>(cs: I) -> Result<HashCommitment>
where
    I: IntoIterator<Item = &'a HashCommitment>,
{
    let mut iter = cs.into_iter();
    let mut acc = iter.next().ok_or(CryptoError::EmptyCombine)?.clone();
    for c in iter {
        if c.chunks.len() != acc.chunks.len() {
            return Err(CryptoError::ChunkMismatch(acc.chunks.len(), c.chunks.len()));
        }
        for (a, b) in acc.chunks.iter_mut().zip(&c.chunks) {
            *a += b;
        }
    }
    Ok(acc)
}

/// True iff `H(claimed_sum)` equals the combination of the commitments.
/// Any mismatch, including malformed or empty input, yields `false`.
pub fn hh_verify_sum<'a, I>(group: &GroupParams, claimed_sum: &QuantizedParams, cs: I) -> bool
where
    I: IntoIterator<Item = &'a HashCommitment>,
{
    match hh_combine(cs) {
        Ok(combined) => {
            combined.num_chunks() == chunk_count(group, claimed_sum.len())
                && hh_commit(group, claimed_sum) == combined
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::FixedPoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_qp(len: usize, rng: &mut ChaCha20Rng) -> QuantizedParams {
        QuantizedParams::from_scalars(1, (0..len).map(|_| Scalar::random(rng)).collect())
    }

    #[test]
    fn zero_vector_commits_to_identity() {
        let group = GroupParams::new(8);
        for len in [1, 8, 9, 20] {
            let c = hh_commit(&group, &QuantizedParams::zeros(1, len));
            assert!(c.is_identity());
            assert_eq!(c.num_chunks(), chunk_count(&group, len));
        }
    }

    #[test]
    fn unit_vector_commits_to_first_generator() {
        let group = GroupParams::new(8);
        let qp = QuantizedParams::from_scalars(1, vec![Scalar::ONE]);
        assert_eq!(hh_commit(&group, &qp).chunks(), &[group.vector_generator(0)]);
    }

    #[test]
    fn commit_matches_naive_product() {
        let group = GroupParams::new(4);
        let fp = FixedPoint::default();
        let qp = fp.quantize(&[0.5, -2.25, 3.0, -0.125, 7.0, -1.0]).unwrap();
        let mut naive = [RistrettoPoint::identity(); 2];
        for (i, v) in qp.values().iter().enumerate() {
            naive[i / 4] += v * group.vector_generator(i % 4);
        }
        assert_eq!(hh_commit(&group, &qp).chunks(), &naive);
    }

    #[test]
    fn combine_single_and_order_independent() {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let cs: Vec<_> = (0..4).map(|_| hh_commit(&group, &random_qp(10, &mut rng))).collect();
        assert_eq!(hh_combine([&cs[0]]).unwrap(), cs[0]);
        let fwd = hh_combine(&cs).unwrap();
        let rev = hh_combine(cs.iter().rev()).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn combine_of_copies_equals_scaled_commit() {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let qp = random_qp(9, &mut rng);
        let c = hh_commit(&group, &qp);
        let n = 5u64;
        let copies = vec![c; n as usize];
        let scaled = QuantizedParams::from_scalars(
            1,
            qp.values().iter().map(|v| v * Scalar::from(n)).collect(),
        );
        assert_eq!(hh_combine(&copies).unwrap(), hh_commit(&group, &scaled));
    }

    #[test]
    fn combine_rejects_mismatched_chunks() {
        let group = GroupParams::new(4);
        let a = hh_commit(&group, &QuantizedParams::zeros(1, 4));
        let b = hh_commit(&group, &QuantizedParams::zeros(1, 5));
        assert_eq!(hh_combine([&a, &b]), Err(CryptoError::ChunkMismatch(1, 2)));
        assert_eq!(hh_combine(std::iter::empty()), Err(CryptoError::EmptyCombine));
    }

    #[test]
    fn verify_sum_detects_perturbation() {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let parts: Vec<_> = (0..3).map(|_| random_qp(6, &mut rng)).collect();
        let cs: Vec<_> = parts.iter().map(|p| hh_commit(&group, p)).collect();
        let mut sum = parts[0].clone();
        sum.add_assign(&parts[1]);
        sum.add_assign(&parts[2]);
        assert!(hh_verify_sum(&group, &sum, &cs));
        sum.values_mut()[5] += Scalar::ONE;
        assert!(!hh_verify_sum(&group, &sum, &cs));
        assert!(!hh_verify_sum(&group, &sum, std::iter::empty()));
    }

    #[test]
    fn commitment_encoding_roundtrip() {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let c = hh_commit(&group, &random_qp(7, &mut rng));
        let bytes = c.to_bytes();
        assert_eq!(bytes.len(), 4 + 64);
        assert_eq!(HashCommitment::from_bytes(&bytes).unwrap(), c);
        assert!(HashCommitment::from_bytes(&bytes[..40]).is_err());
    }
}

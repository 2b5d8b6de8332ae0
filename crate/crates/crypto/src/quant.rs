//! Fixed-point bridge between real-valued model parameters and field elements.

use crate::error::{CryptoError, Result};
use crate::group::scalar_from_bytes;
use curve25519_dalek::scalar::Scalar;
use sha2::{Digest, Sha256};

pub const DEFAULT_SCALE: u64 = 1 << 16;
pub const DEFAULT_BOUND: u64 = 1 << 10;

const DIGEST_LABEL: &[u8] = b"fedring/params-digest/v1";

/// Fixed-point codec: scale `S` and magnitude bound `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPoint {
    scale: u64,
    bound: u64,
}

impl Default for FixedPoint {
    fn default() -> Self {
        Self {
            scale: DEFAULT_SCALE,
            bound: DEFAULT_BOUND,
        }
    }
}

impl FixedPoint {
    /// `scale · bound` must stay below 2^40 so sums over 2^20 participants
    /// remain exactly representable (and far below q).
    pub fn new(scale: u64, bound: u64) -> Result<Self> {
        if scale == 0 || bound == 0 {
            return Err(CryptoError::InvalidScale("scale and bound must be positive".into()));
        }
        match scale.checked_mul(bound) {
            Some(w) if w < 1 << 40 => Ok(Self { scale, bound }),
            _ => Err(CryptoError::InvalidScale(format!(
                "scale {scale} x bound {bound} exceeds 2^40"
            ))),
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Largest encoded magnitude of a single quantized value.
    pub fn window(&self) -> u64 {
        self.scale * self.bound
    }

    /// Maps each real to `round(x·S) mod q`; negatives become `q − |·|`.
    pub fn quantize(&self, params: &[f64]) -> Result<QuantizedParams> {
        let bound = self.bound as f64;
        let scale = self.scale as f64;
        let values = params
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if !value.is_finite() {
                    return Err(CryptoError::NonFinite { index });
                }
                if value.abs() > bound {
                    return Err(CryptoError::OutOfBound { index, value, bound });
                }
                Ok(signed_to_scalar((value * scale).round() as i64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantizedParams {
            scale: self.scale,
            values,
        })
    }

    /// Decodes `qp` and divides by `S · divisor`.
    ///
    /// Every encoded magnitude must be at most `S · B · divisor`, the largest
    /// sum `divisor` in-bound vectors can produce.
    pub fn dequantize(&self, qp: &QuantizedParams, divisor: u64) -> Result<Vec<f64>> {
        if qp.scale != self.scale {
            return Err(CryptoError::InvalidScale(format!(
                "vector scale {} does not match codec scale {}",
                qp.scale, self.scale
            )));
        }
        if divisor == 0 {
            return Err(CryptoError::InvalidScale("divisor must be positive".into()));
        }
        let limit = self.window() as u128 * divisor as u128;
        let denom = self.scale as f64 * divisor as f64;
        qp.values
            .iter()
            .enumerate()
            .map(|(i, s)| match scalar_to_signed(s) {
                Some(v) if (v.unsigned_abs() as u128) <= limit => Ok(v as f64 / denom),
                _ => Err(CryptoError::Overflow(i)),
            })
            .collect()
    }
}

/// Quantized parameter vector: field elements mod q plus the fixed-point scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedParams {
    scale: u64,
    values: Vec<Scalar>,
}

impl QuantizedParams {
    pub fn from_scalars(scale: u64, values: Vec<Scalar>) -> Self {
        Self { scale, values }
    }

    pub fn zeros(scale: u64, len: usize) -> Self {
        Self {
            scale,
            values: vec![Scalar::ZERO; len],
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Scalar] {
        &mut self.values
    }

    /// Element-wise sum mod q. Panics on length or scale mismatch.
    pub fn add_assign(&mut self, other: &QuantizedParams) {
        assert_eq!(self.len(), other.len(), "length mismatch");
        assert_eq!(self.scale, other.scale, "scale mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// Canonical encoding: `scale u64 LE ‖ len u64 LE ‖ len × 32-byte scalars`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 32 * self.values.len());
        self.write_to(&mut out);
        out
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.scale.to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(v.as_bytes());
        }
    }

    pub fn encoded_len(&self) -> usize {
        16 + 32 * self.values.len()
    }

    /// Decodes a prefix of `bytes`, returning the vector and the bytes consumed.
    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 16 {
            return Err(CryptoError::Encoding("quantized vector header truncated"));
        }
        let scale = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = (len as u128) * 32;
        if body > (bytes.len() - 16) as u128 {
            return Err(CryptoError::Encoding("quantized vector body truncated"));
        }
        let len = len as usize;
        let values = bytes[16..16 + 32 * len]
            .chunks_exact(32)
            .map(|c| scalar_from_bytes(c).ok_or(CryptoError::Encoding("non-canonical scalar")))
            .collect::<Result<Vec<_>>>()?;
        Ok((Self { scale, values }, 16 + 32 * len))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (qp, used) = Self::read_from(bytes)?;
        if used != bytes.len() {
            return Err(CryptoError::Encoding("trailing bytes after quantized vector"));
        }
        Ok(qp)
    }
}

/// SHA-256 over `label ‖ round ‖ length ‖ scale ‖ values`; this is the
/// message that gets ring-signed.
pub fn digest_params(qp: &QuantizedParams, round: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DIGEST_LABEL);
    h.update(round.to_le_bytes());
    h.update((qp.values.len() as u64).to_le_bytes());
    h.update(qp.scale.to_le_bytes());
    for v in &qp.values {
        h.update(v.as_bytes());
    }
    h.finalize().into()
}

pub(crate) fn signed_to_scalar(v: i64) -> Scalar {
    if v >= 0 {
        Scalar::from(v as u64)
    } else {
        -Scalar::from(v.unsigned_abs())
    }
}

/// Interprets a scalar as a signed 64-bit integer if it lies within
/// `±(2^63 − 1)` of zero.
pub(crate) fn scalar_to_signed(s: &Scalar) -> Option<i64> {
    fn small(s: &Scalar) -> Option<u64> {
        let b = s.as_bytes();
        if b[8..].iter().all(|&x| x == 0) {
            let v = u64::from_le_bytes(b[..8].try_into().unwrap());
            (v <= i64::MAX as u64).then_some(v)
        } else {
            None
        }
    }
    if let Some(v) = small(s) {
        return Some(v as i64);
    }
    small(&-s).map(|v| -(v as i64))
}

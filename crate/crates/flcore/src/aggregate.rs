//! Uniform FedAvg over quantized updates.
//!
//! The server only ever produces the exact modular sum and the participant
//! count; the average is materialised by each client after it has checked
//! the sum against the multicast hash commitments.

use crate::error::{FlError, Result};
use crate::model::{ModelArch, ModelParams};
use fedring_crypto::{FixedPoint, QuantizedParams};

/// Exact element-wise sum of `updates` mod q, plus the count.
pub fn fedavg_sum<'a, I>(updates: I) -> Result<(QuantizedParams, usize)>
where
    I: IntoIterator<Item = &'a QuantizedParams>,
{
    let mut iter = updates.into_iter();
    let first = iter.next().ok_or(FlError::NoUpdates)?;
    let mut sum = first.clone();
    let mut count = 1;
    for (i, u) in iter.enumerate() {
        if u.len() != sum.len() || u.scale() != sum.scale() {
            return Err(FlError::LengthMismatch {
                index: i + 1,
                expected: sum.len(),
                got: u.len(),
            });
        }
        sum.add_assign(u);
        count += 1;
    }
    Ok((sum, count))
}

/// Client-side average: `dequantize(sum, S, n)`.
pub fn client_average(sum: &QuantizedParams, count: usize, arch: &ModelArch, codec: &FixedPoint) -> Result<ModelParams> {
    if count == 0 {
        return Err(FlError::NoUpdates);
    }
    let values = codec.dequantize(sum, count as u64)?;
    ModelParams::new(arch.clone(), values)
}

/// True iff `‖next − prev‖∞ < tolerance` or the round cap is reached.
pub fn has_converged(prev: &ModelParams, next: &ModelParams, tolerance: f64, round: usize, max_rounds: usize) -> bool {
    if round >= max_rounds {
        return true;
    }
    let delta = prev
        .values()
        .iter()
        .zip(next.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    delta < tolerance
}

//! Fake-update strategies for participants that try to corrupt the model.

use crate::data::LocalDataset;
use crate::error::Result;
use crate::model::ModelParams;
use crate::train::{local_update, Hyperparams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// i.i.d. uniform noise in `±magnitude`.
    RandomNoise,
    /// Negation of an honest local step.
    SignFlip,
    /// `magnitude · ω`.
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryStrategy {
    pub kind: AdversaryKind,
    pub magnitude: f64,
}

impl AdversaryStrategy {
    /// Uniform noise at half the quantization bound.
    pub fn random_noise(bound: f64) -> Self {
        Self {
            kind: AdversaryKind::RandomNoise,
            magnitude: bound / 2.0,
        }
    }

    pub fn sign_flip() -> Self {
        Self {
            kind: AdversaryKind::SignFlip,
            magnitude: 1.0,
        }
    }

    pub fn scale(k: f64) -> Self {
        Self {
            kind: AdversaryKind::Scale,
            magnitude: k,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.magnitude.is_finite() && (self.kind != AdversaryKind::RandomNoise || self.magnitude >= 0.0)
    }
}

/// Produces a fake update. Outputs are clamped to `±bound` because they
/// still have to pass through quantization.
pub fn adversary_update(
    strategy: &AdversaryStrategy,
    global: &ModelParams,
    data: Option<&LocalDataset>,
    hp: &Hyperparams,
    bound: f64,
    seed: u64,
) -> Result<ModelParams> {
    let mut out = match strategy.kind {
        AdversaryKind::RandomNoise => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp = strategy.magnitude.min(bound);
            let mut p = global.clone();
            for v in p.values_mut() {
                *v = if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 };
            }
            p
        }
        AdversaryKind::SignFlip => {
            let mut p = match data {
                Some(d) if !d.is_empty() => local_update(d, global, hp, seed)?,
                _ => global.clone(),
            };
            p.values_mut().iter_mut().for_each(|v| *v = -*v);
            p
        }
        AdversaryKind::Scale => {
            let mut p = global.clone();
            p.values_mut().iter_mut().for_each(|v| *v *= strategy.magnitude);
            p
        }
    };
    out.values_mut().iter_mut().for_each(|v| *v = v.clamp(-bound, bound));
    Ok(out)
}

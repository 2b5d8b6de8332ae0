use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded per-round device failures: each participant independently fails
/// to submit with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutPlan {
    probability: f64,
    seed: u64,
}

impl DropoutPlan {
    /// `probability` is clamped to `[0, 1]`.
    pub fn new(probability: f64, seed: u64) -> Self {
        Self {
            probability: probability.clamp(0.0, 1.0),
            seed,
        }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0)
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    /// Per-participant dropped flags for `round`.
    pub fn dropped(&self, round: u64, participants: usize) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        (0..participants).map(|_| rng.gen_bool(self.probability)).collect()
    }
}

/// Keeps the entries of participants that did not drop out in `round`.
/// `submissions[i]` belongs to participant `i`; a dropped participant loses
/// its update and its commitment together.
pub fn apply_dropout<T>(plan: &DropoutPlan, round: u64, submissions: Vec<T>) -> Vec<T> {
    let dropped = plan.dropped(round, submissions.len());
    submissions
        .into_iter()
        .zip(dropped)
        .filter_map(|(s, d)| (!d).then_some(s))
        .collect()
}

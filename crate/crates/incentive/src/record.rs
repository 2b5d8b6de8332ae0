use crate::config::CreditThresholds;
use fedring_crypto::Level;
use serde::{Deserialize, Serialize};

/// A participant's standing with the incentive center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub user_id: String,
    pub epsilon: f64,
    credits: f64,
    #[serde(with = "crate::level_serde::option")]
    level: Option<Level>,
}

impl ContributionRecord {
    pub fn new(user_id: impl Into<String>, epsilon: f64, thresholds: &CreditThresholds) -> Self {
        Self {
            user_id: user_id.into(),
            epsilon: epsilon.clamp(0.0, 1.0),
            credits: 0.0,
            level: thresholds.level_for(0.0),
        }
    }

    pub fn credits(&self) -> f64 {
        self.credits
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    /// Adds a non-negative amount and moves the level if a threshold was crossed.
    pub(crate) fn add_credits(&mut self, delta: f64, thresholds: &CreditThresholds) {
        debug_assert!(delta >= 0.0);
        self.credits += delta.max(0.0);
        let next = thresholds.level_for(self.credits);
        if next != self.level {
            log::info!(
                "user {} moves from {} to {} at {:.3} credits",
                self.user_id,
                self.level.map_or('-', Level::as_char),
                next.map_or('-', Level::as_char),
                self.credits
            );
            self.level = next;
        }
    }

    pub fn may_access(&self, target: Level) -> bool {
        self.level.is_some_and(|l| l.dominates(target))
    }
}

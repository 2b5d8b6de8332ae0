//! Contribution scoring, credit accrual, model grading and the leveled
//! encrypted model market.

mod center;
mod config;
mod error;
mod level_serde;
mod record;
mod scoring;

pub use center::{AccessDecision, CreditChange, IncentiveCenter, LedgerEvent, MarketEntry, ModelTag};
pub use config::{CreditThresholds, EpsilonRule, GradeThresholds, IncentiveConfig, LevelWeights};
pub use error::{IncentiveError, Result};
pub use record::ContributionRecord;
pub use scoring::{grade_model, score_contribution, PlaintextOracle, ScoringOracle};

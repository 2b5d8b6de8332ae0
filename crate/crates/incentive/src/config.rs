use fedring_crypto::Level;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonRule {
    /// ε = oracle accuracy.
    #[default]
    Accuracy,
    /// ε = (accuracy − 1/k) / (1 − 1/k), clamped at 0.
    ChanceCorrected,
}

/// Minimum credits for each user level. A user below `d` has no level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreditThresholds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for CreditThresholds {
    fn default() -> Self {
        Self {
            a: 40.0,
            b: 15.0,
            c: 5.0,
            d: 0.0,
        }
    }
}

impl CreditThresholds {
    pub fn level_for(&self, credits: f64) -> Option<Level> {
        if credits >= self.a {
            Some(Level::A)
        } else if credits >= self.b {
            Some(Level::B)
        } else if credits >= self.c {
            Some(Level::C)
        } else if credits >= self.d {
            Some(Level::D)
        } else {
            None
        }
    }
}

/// Credits per access to a model of each level, scaled by ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for LevelWeights {
    fn default() -> Self {
        Self {
            a: 4.0,
            b: 3.0,
            c: 2.0,
            d: 1.0,
        }
    }
}

impl LevelWeights {
    pub fn weight(&self, level: Level) -> f64 {
        match level {
            Level::A => self.a,
            Level::B => self.b,
            Level::C => self.c,
            Level::D => self.d,
        }
    }
}

/// Minimum accuracy for each model grade; anything lower is D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeThresholds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GradeThresholds {
    fn default() -> Self {
        Self {
            a: 0.95,
            b: 0.90,
            c: 0.80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IncentiveConfig {
    pub epsilon_rule: EpsilonRule,
    pub credit_thresholds: CreditThresholds,
    pub level_weights: LevelWeights,
    pub grade_thresholds: GradeThresholds,
}

impl IncentiveConfig {
    /// Every problem with the config, empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let t = &self.credit_thresholds;
        for (name, v) in [("a", t.a), ("b", t.b), ("c", t.c), ("d", t.d)] {
            if !v.is_finite() || v < 0.0 {
                errs.push(format!("incentive.credit_thresholds.{name} must be a finite non-negative number"));
            }
        }
        if !(t.a >= t.b && t.b >= t.c && t.c >= t.d) {
            errs.push("incentive.credit_thresholds must satisfy a >= b >= c >= d".into());
        }
        let w = &self.level_weights;
        for (name, v) in [("a", w.a), ("b", w.b), ("c", w.c), ("d", w.d)] {
            if !v.is_finite() || v < 0.0 {
                errs.push(format!("incentive.level_weights.{name} must be a finite non-negative number"));
            }
        }
        let g = &self.grade_thresholds;
        for (name, v) in [("a", g.a), ("b", g.b), ("c", g.c)] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("incentive.grade_thresholds.{name} must lie in [0, 1]"));
            }
        }
        if !(g.a >= g.b && g.b >= g.c) {
            errs.push("incentive.grade_thresholds must satisfy a >= b >= c".into());
        }
        errs
    }
}

use crate::config::{EpsilonRule, GradeThresholds};
use crate::error::{IncentiveError, Result};
use fedring_crypto::Level;
use fedring_flcore::{evaluate, LocalDataset, ModelParams};

/// Accuracy of a model on a dataset the caller never sees. The plaintext
/// implementation below is the reference; a secure two-party inference
/// backend would implement the same trait.
pub trait ScoringOracle {
    fn input_width(&self) -> usize;
    fn classes(&self) -> usize;
    fn accuracy(&self, model: &ModelParams) -> Result<f64>;
}

pub struct PlaintextOracle {
    data: LocalDataset,
    classes: usize,
}

impl PlaintextOracle {
    pub fn new(data: LocalDataset, classes: usize) -> Result<Self> {
        data.check_shape(data.dim(), classes)?;
        Ok(Self { data, classes })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

impl ScoringOracle for PlaintextOracle {
    fn input_width(&self) -> usize {
        self.data.dim()
    }

    fn classes(&self) -> usize {
        self.classes
    }

    fn accuracy(&self, model: &ModelParams) -> Result<f64> {
        let arch = model.arch();
        if arch.input_width() != self.data.dim() || arch.classes() != self.classes {
            return Err(IncentiveError::ArchMismatch {
                model_input: arch.input_width(),
                model_classes: arch.classes(),
                data_input: self.data.dim(),
                data_classes: self.classes,
            });
        }
        Ok(evaluate(model, &self.data)?)
    }
}

/// Contribution weight ε of a user's pre-federation local model.
pub fn score_contribution(model: &ModelParams, oracle: &dyn ScoringOracle, rule: EpsilonRule) -> Result<f64> {
    let acc = oracle.accuracy(model)?;
    let eps = match rule {
        EpsilonRule::Accuracy => acc,
        EpsilonRule::ChanceCorrected => {
            let chance = 1.0 / oracle.classes() as f64;
            (acc - chance) / (1.0 - chance)
        }
    };
    Ok(eps.clamp(0.0, 1.0))
}

/// Grade by accuracy; a value on a boundary takes the higher grade.
pub fn grade_model(accuracy: f64, t: &GradeThresholds) -> Level {
    if accuracy >= t.a {
        Level::A
    } else if accuracy >= t.b {
        Level::B
    } else if accuracy >= t.c {
        Level::C
    } else {
        Level::D
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fedring_flcore::ModelArch;

    /// A 2-input, k-class linear model whose output is class `c` for every input.
    fn constant_model(classes: usize, c: usize) -> ModelParams {
        let arch = ModelArch::new(vec![2, classes]).unwrap();
        let mut v = vec![0.0; arch.param_count()];
        v[2 * classes + c] = 1.0;
        ModelParams::new(arch, v).unwrap()
    }

    fn balanced(classes: usize, per: usize) -> LocalDataset {
        let labels: Vec<usize> = (0..classes * per).map(|i| i % classes).collect();
        let features = labels.iter().flat_map(|&l| [l as f64, 1.0]).collect();
        LocalDataset::new("oracle", 2, features, labels).unwrap()
    }

    #[test]
    fn perfect_and_constant_models() {
        let oracle = PlaintextOracle::new(balanced(10, 20), 10).unwrap();
        let eps = score_contribution(&constant_model(10, 3), &oracle, EpsilonRule::Accuracy).unwrap();
        assert!((eps - 0.1).abs() < 1e-12);
        assert_eq!(
            score_contribution(&constant_model(10, 3), &oracle, EpsilonRule::ChanceCorrected).unwrap(),
            0.0
        );

        let single: Vec<usize> = vec![4; 30];
        let data = LocalDataset::new("o", 2, vec![0.5; 60], single).unwrap();
        let oracle = PlaintextOracle::new(data, 10).unwrap();
        assert_eq!(score_contribution(&constant_model(10, 4), &oracle, EpsilonRule::Accuracy).unwrap(), 1.0);
    }

    #[test]
    fn arch_mismatch_rejected() {
        let oracle = PlaintextOracle::new(balanced(10, 2), 10).unwrap();
        assert!(matches!(
            score_contribution(&constant_model(3, 0), &oracle, EpsilonRule::Accuracy),
            Err(IncentiveError::ArchMismatch { .. })
        ));
    }

    #[test]
    fn grade_boundaries() {
        let t = GradeThresholds::default();
        assert_eq!(grade_model(0.95, &t), Level::A);
        assert_eq!(grade_model(0.9499, &t), Level::B);
        assert_eq!(grade_model(0.90, &t), Level::B);
        assert_eq!(grade_model(0.80, &t), Level::C);
        assert_eq!(grade_model(0.0, &t), Level::D);
        assert_eq!(grade_model(1.0, &t), Level::A);
    }
}

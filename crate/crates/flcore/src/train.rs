use crate::data::LocalDataset;
use crate::error::{FlError, Result};
use crate::model::{accumulate_gradient, ModelParams, Workspace};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub max_rounds: usize,
    /// Convergence tolerance on the max-norm change between rounds.
    pub tolerance: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            local_epochs: 1,
            batch_size: 32,
            max_rounds: 50,
            tolerance: 1e-4,
        }
    }
}

impl Hyperparams {
    /// `local_epochs = 0` is allowed (it makes local training the identity);
    /// everything else must be positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FlError::InvalidHyperparams("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(FlError::InvalidHyperparams("batch_size must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(FlError::InvalidHyperparams("max_rounds must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(FlError::InvalidHyperparams("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Result of a local training run.
#[derive(Debug, Clone)]
pub struct LocalTraining {
    pub params: ModelParams,
    /// Mean mini-batch loss observed during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD on `data` starting from `global`, reshuffling every epoch
/// with a stream seeded by `seed`.
pub fn local_update(data: &LocalDataset, global: &ModelParams, hp: &Hyperparams, seed: u64) -> Result<ModelParams> {
    local_training(data, global, hp, seed).map(|t| t.params)
}

pub fn local_training(data: &LocalDataset, global: &ModelParams, hp: &Hyperparams, seed: u64) -> Result<LocalTraining> {
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    hp.validate()?;
    let arch = global.arch().clone();
    data.check_shape(arch.input_width(), arch.classes())?;

    let mut params = global.clone();
    let mut grad = vec![0.0; params.len()];
    let mut ws = Workspace::new(&arch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(hp.local_epochs);

    for epoch in 0..hp.local_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(hp.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                loss_sum += accumulate_gradient(params.values(), &arch, data.row(i), data.label(i), &mut ws, &mut grad);
            }
            let step = hp.learning_rate / batch.len() as f64;
            for (w, g) in params.values_mut().iter_mut().zip(&grad) {
                *w -= step * g;
            }
        }
        let mean = loss_sum / data.len() as f64;
        log::debug!("{}: epoch {} mean loss {:.5}", data.owner(), epoch, mean);
        if let Some(prev) = epoch_losses.last() {
            if mean > *prev {
                log::debug!("{}: local loss rose from {prev:.5} to {mean:.5}", data.owner());
            }
        }
        epoch_losses.push(mean);
    }
    Ok(LocalTraining { params, epoch_losses })
}

//! Model, local training, FedAvg aggregation and adversarial updates.

pub mod adversary;
pub mod aggregate;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod train;

pub use adversary::{adversary_update, AdversaryKind, AdversaryStrategy};
pub use aggregate::{client_average, fedavg_sum, has_converged};
pub use data::LocalDataset;
pub use error::{FlError, Result};
pub use eval::{evaluate, mean_loss};
pub use model::{init_global_model, predict, sample_gradient, sample_loss, ModelArch, ModelParams};
pub use train::{local_training, local_update, Hyperparams, LocalTraining};

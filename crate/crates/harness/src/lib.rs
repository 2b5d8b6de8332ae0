//! Experiment harness: configuration, datasets, the federation loop,
//! metrics and the cryptographic cost benchmark.

pub mod bench;
pub mod config;
pub mod data;
pub mod experiment;
pub mod metrics;
pub mod seeds;

pub use bench::{bench_crypto, BenchConfig, BenchReport};
pub use config::{ConfigError, ExperimentConfig, Overrides, ServerBehavior, Task, TransportMode};
pub use data::{gen_synthetic, load_mnist_idx, partition_data, DataError};
pub use experiment::{run_and_write, run_experiment, ExperimentOutcome};
pub use metrics::{HashCheck, MetricsRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] fedring_flcore::FlError),
    #[error(transparent)]
    Crypto(#[from] fedring_crypto::CryptoError),
    #[error(transparent)]
    Incentive(#[from] fedring_incentive::IncentiveError),
    #[error(transparent)]
    Transport(#[from] fedring_transport::TransportError),
    #[error(transparent)]
    Socket(#[from] fedring_transport::SocketError),
    #[error(transparent)]
    Transcript(#[from] fedring_transport::TranscriptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#![allow(dead_code)]

use fedring::{ExperimentConfig, Task};
use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Default config with the MNIST paths anchored at the workspace root.
pub fn anchored(mut cfg: ExperimentConfig) -> ExperimentConfig {
    let root = workspace_root();
    let d = &mut cfg.data;
    for p in [&mut d.train_images, &mut d.train_labels, &mut d.test_images, &mut d.test_labels] {
        if p.is_relative() {
            *p = root.join(&*p);
        }
    }
    cfg
}

pub fn mnist(participants: usize, seed: u64) -> ExperimentConfig {
    anchored(ExperimentConfig {
        task: Task::Mnist,
        participants,
        samples_per_participant: 600,
        seed,
        ..ExperimentConfig::default()
    })
}

/// The shipped participation-sweep config.
pub fn mnist_participation(participants: usize, seed: u64) -> ExperimentConfig {
    let text = std::fs::read_to_string(workspace_root().join("configs/mnist_participation.toml")).unwrap();
    let mut cfg = anchored(ExperimentConfig::from_toml(&text).unwrap());
    cfg.participants = participants;
    cfg.seed = seed;
    cfg
}

/// Small synthetic run that finishes in well under a second.
pub fn small_synthetic(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        participants: 5,
        samples_per_participant: 40,
        seed,
        scoring_epochs: 1,
        ..ExperimentConfig::default()
    };
    cfg.hyperparams.max_rounds = 3;
    cfg.data.synthetic_test_size = 200;
    cfg.data.oracle_size = 50;
    cfg
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// CSV body without the commented config header.
pub fn csv_body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

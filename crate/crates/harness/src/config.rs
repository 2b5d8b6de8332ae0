//! Experiment configuration: a TOML file, overlaid on defaults, with CLI
//! flags applied last. The full resolved config is written into every
//! metrics file so a run can be repeated from its own output.

use fedring_crypto::{FixedPoint, DEFAULT_BOUND, DEFAULT_CHUNK_WIDTH, DEFAULT_SCALE};
use fedring_flcore::{AdversaryStrategy, Hyperparams, ModelArch};
use fedring_incentive::IncentiveConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mnist,
    Synthetic,
}

/// How the aggregation server behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ServerBehavior {
    #[default]
    Honest,
    /// Returns the previous round's sum when it has one.
    Stale,
    /// Adds one unit to the first coordinate of the true sum.
    Perturb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    /// In-process mailbox.
    #[default]
    Memory,
    /// Participants upload over TCP to a collector on localhost.
    Socket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CryptoConfig {
    /// Upper bound on ring size; rings are capped by the number of registered keys.
    pub ring_size: usize,
    pub scale: u64,
    pub bound: u64,
    pub chunk_width: usize,
}

impl Default for CryptoConfig {
    fn default() -> Self {
        Self {
            ring_size: 10,
            scale: DEFAULT_SCALE,
            bound: DEFAULT_BOUND,
            chunk_width: DEFAULT_CHUNK_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    /// Items taken from the front of the test set for the scoring oracle;
    /// accuracy is reported on the rest.
    pub oracle_size: usize,
    pub synthetic_test_size: usize,
    pub synthetic_classes: usize,
    pub synthetic_dim: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train_images: "data/mnist/subset-train-images-idx3-ubyte.gz".into(),
            train_labels: "data/mnist/subset-train-labels-idx1-ubyte.gz".into(),
            test_images: "data/mnist/subset-test-images-idx3-ubyte.gz".into(),
            test_labels: "data/mnist/subset-test-labels-idx1-ubyte.gz".into(),
            oracle_size: 500,
            synthetic_test_size: 2000,
            synthetic_classes: 2,
            synthetic_dim: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub mode: TransportMode,
    /// Collector port in socket mode; 0 picks a free port.
    pub port: u16,
    /// Write `transcript.jsonl` next to the metrics.
    pub transcript: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub task: Task,
    pub participants: usize,
    pub samples_per_participant: usize,
    /// Adversaries are counted within `participants`.
    pub adversaries: usize,
    pub verification: bool,
    pub dropout: f64,
    pub seed: u64,
    /// Worker threads for local training; 0 uses one per core.
    pub threads: usize,
    pub server: ServerBehavior,
    /// Local epochs for the pre-federation model that sets ε.
    pub scoring_epochs: usize,
    /// Hidden layer widths; empty picks the task default.
    pub hidden: Vec<usize>,
    pub adversary: AdversaryStrategy,
    pub hyperparams: Hyperparams,
    pub crypto: CryptoConfig,
    pub data: DataConfig,
    pub incentive: IncentiveConfig,
    pub transport: TransportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment_id: "default".into(),
            task: Task::Synthetic,
            participants: 10,
            samples_per_participant: 100,
            adversaries: 0,
            verification: true,
            dropout: 0.0,
            seed: 1,
            threads: 0,
            server: ServerBehavior::Honest,
            scoring_epochs: 5,
            hidden: Vec::new(),
            adversary: AdversaryStrategy::random_noise(DEFAULT_BOUND as f64),
            hyperparams: Hyperparams::default(),
            crypto: CryptoConfig::default(),
            data: DataConfig::default(),
            incentive: IncentiveConfig::default(),
            transport: TransportConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

/// CLI overrides; `None` leaves the file or default value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment_id: Option<String>,
    pub task: Option<Task>,
    pub participants: Option<usize>,
    pub samples_per_participant: Option<usize>,
    pub adversaries: Option<usize>,
    pub verification: Option<bool>,
    pub dropout: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub max_rounds: Option<usize>,
    pub server: Option<ServerBehavior>,
    pub transport: Option<TransportMode>,
    pub transcript: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Recovers the config from the `#`-prefixed header block of a metrics file.
    pub fn from_metrics_header(text: &str) -> Result<Self, ConfigError> {
        let body: String = text
            .lines()
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| format!("{}\n", l.strip_prefix(' ').unwrap_or(l)))
            .collect();
        Self::from_toml(&body)
    }

    /// Loads a TOML config, or the header block when `path` ends in `.csv`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "csv") {
            Self::from_metrics_header(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($field:expr, $v:expr) => {
                if let Some(v) = $v.clone() {
                    $field = v;
                }
            };
        }
        set!(self.experiment_id, o.experiment_id);
        set!(self.task, o.task);
        set!(self.participants, o.participants);
        set!(self.samples_per_participant, o.samples_per_participant);
        set!(self.adversaries, o.adversaries);
        set!(self.verification, o.verification);
        set!(self.dropout, o.dropout);
        set!(self.seed, o.seed);
        set!(self.threads, o.threads);
        set!(self.hyperparams.max_rounds, o.max_rounds);
        set!(self.server, o.server);
        set!(self.transport.mode, o.transport);
        set!(self.transport.transcript, o.transcript);
    }

    pub fn arch(&self) -> ModelArch {
        let (input, classes, default_hidden) = match self.task {
            Task::Mnist => (784, 10, 32),
            Task::Synthetic => (self.data.synthetic_dim, self.data.synthetic_classes, 16),
        };
        let mut widths = vec![input];
        if self.hidden.is_empty() {
            widths.push(default_hidden);
        } else {
            widths.extend(&self.hidden);
        }
        widths.push(classes);
        ModelArch::new(widths).expect("validated widths")
    }

    pub fn codec(&self) -> FixedPoint {
        FixedPoint::new(self.crypto.scale, self.crypto.bound).expect("validated codec")
    }

    pub fn honest(&self) -> usize {
        self.participants - self.adversaries
    }

    /// Every problem with the config, so a user can fix them in one pass.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.experiment_id.is_empty()
            || !self
                .experiment_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.experiment_id.starts_with('.')
        {
            errs.push("experiment_id must be non-empty and use only [A-Za-z0-9._-]".to_string());
        }
        if self.participants == 0 {
            errs.push("participants must be at least 1".into());
        }
        if self.adversaries >= self.participants.max(1) {
            errs.push(format!(
                "adversaries ({}) must be fewer than participants ({})",
                self.adversaries, self.participants
            ));
        }
        if self.samples_per_participant == 0 {
            errs.push("samples_per_participant must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            errs.push("dropout must lie in [0, 1]".into());
        }
        if self.threads > 1024 {
            errs.push("threads must be at most 1024".into());
        }
        if self.hidden.contains(&0) {
            errs.push("hidden layer widths must be positive".into());
        }
        if !self.adversary.is_valid() {
            errs.push("adversary.magnitude is invalid for its kind".into());
        }
        if let Err(e) = self.hyperparams.validate() {
            errs.push(format!("hyperparams: {e}"));
        }
        if self.crypto.ring_size < 2 {
            errs.push("crypto.ring_size must be at least 2".into());
        }
        if self.crypto.chunk_width == 0 {
            errs.push("crypto.chunk_width must be positive".into());
        }
        if let Err(e) = FixedPoint::new(self.crypto.scale, self.crypto.bound) {
            errs.push(format!("crypto: {e}"));
        }
        if self.data.oracle_size == 0 {
            errs.push("data.oracle_size must be positive".into());
        }
        if self.task == Task::Synthetic {
            if self.data.synthetic_classes < 2 {
                errs.push("data.synthetic_classes must be at least 2".into());
            }
            if self.data.synthetic_dim == 0 {
                errs.push("data.synthetic_dim must be positive".into());
            }
            if self.data.synthetic_test_size <= self.data.oracle_size {
                errs.push("data.synthetic_test_size must exceed data.oracle_size".into());
            }
        }
        errs.extend(self.incentive.validate());
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

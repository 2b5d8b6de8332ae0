//! The incentive center: contribution records, credit accrual and the
//! leveled encrypted model market.
//!
//! A persistent center keeps, under `<root>/<experiment id>/`:
//!
//! * `center.key`: hex of the level-A master key
//! * `ledger.jsonl`: one [`LedgerEvent`] per line, in the order applied
//! * `blobs/<sha256 hex>.bin`: sealed model blobs, named by content hash
//!
//! Replaying `register`, `publish` and `access` events rebuilds the state;
//! `credit`, `grant` and `deny` lines are an audit trail and are cross-checked
//! during replay.

use crate::config::IncentiveConfig;
use crate::error::{IncentiveError, Result};
use crate::record::ContributionRecord;
use fedring_crypto::{
    decrypt_model_with, derive_level_key, encrypt_model, Level, LevelKey, ModelCiphertext, UserCredential,
    UserSecretKey,
};
use fedring_flcore::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

const KEY_FILE: &str = "center.key";
const LEDGER_FILE: &str = "ledger.jsonl";
const BLOB_DIR: &str = "blobs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LedgerEvent {
    Register {
        user: String,
        epsilon: f64,
    },
    Publish {
        model_id: String,
        #[serde(with = "crate::level_serde")]
        level: Level,
        blob: String,
        task: String,
        accuracy: f64,
        participants: Vec<String>,
    },
    Access {
        model_id: String,
        user: String,
    },
    Credit {
        user: String,
        model_id: String,
        delta: f64,
        credits: f64,
        #[serde(with = "crate::level_serde::option")]
        level: Option<Level>,
    },
    Grant {
        user: String,
        #[serde(with = "crate::level_serde")]
        level: Level,
    },
    Deny {
        user: String,
        #[serde(with = "crate::level_serde")]
        requested: Level,
        #[serde(with = "crate::level_serde::option")]
        held: Option<Level>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketEntry {
    pub model_id: String,
    pub level: Level,
    /// SHA-256 of the sealed blob, hex.
    pub blob: String,
    pub task: String,
    pub accuracy: f64,
    pub participants: Vec<String>,
    pub accesses: u64,
    ciphertext: ModelCiphertext,
}

impl MarketEntry {
    pub fn ciphertext(&self) -> &ModelCiphertext {
        &self.ciphertext
    }
}

/// Metadata stored with a published model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTag {
    pub task: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AccessDecision {
    Granted(UserSecretKey),
    Denied { held: Option<Level>, requested: Level },
}

impl AccessDecision {
    pub fn granted(self) -> Option<UserSecretKey> {
        match self {
            AccessDecision::Granted(k) => Some(k),
            AccessDecision::Denied { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreditChange {
    pub user: String,
    pub delta: f64,
    pub credits: f64,
    pub level: Option<Level>,
}

struct Store {
    dir: PathBuf,
    ledger: BufWriter<File>,
}

pub struct IncentiveCenter {
    config: IncentiveConfig,
    master: LevelKey,
    rng: ChaCha20Rng,
    records: BTreeMap<String, ContributionRecord>,
    entries: Vec<MarketEntry>,
    store: Option<Store>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl IncentiveCenter {
    /// In-memory center whose master key and nonces come from `seed`.
    pub fn new(config: IncentiveConfig, seed: u64) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(IncentiveError::Config(errs.join("; ")));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let master = LevelKey::generate_master(&mut rng);
        Ok(Self {
            config,
            master,
            rng,
            records: BTreeMap::new(),
            entries: Vec::new(),
            store: None,
        })
    }

    /// Persistent center under `root/experiment_id`. An existing ledger there
    /// is replaced.
    pub fn create(config: IncentiveConfig, seed: u64, root: &Path, experiment_id: &str) -> Result<Self> {
        let mut center = Self::new(config, seed)?;
        let dir = root.join(experiment_id);
        fs::create_dir_all(dir.join(BLOB_DIR))?;
        fs::write(dir.join(KEY_FILE), hex::encode(center.master.key_bytes()))?;
        let ledger = BufWriter::new(File::create(dir.join(LEDGER_FILE))?);
        center.store = Some(Store { dir, ledger });
        Ok(center)
    }

    /// Reopens a persistent center by replaying its ledger. Further events
    /// are appended.
    pub fn open(config: IncentiveConfig, root: &Path, experiment_id: &str) -> Result<Self> {
        let dir = root.join(experiment_id);
        let key_hex = fs::read_to_string(dir.join(KEY_FILE))?;
        let key: [u8; 32] = hex::decode(key_hex.trim())
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or_else(|| IncentiveError::Ledger {
                line: 0,
                detail: format!("{KEY_FILE} is not a 32-byte hex key"),
            })?;
        let master = LevelKey::new(Level::A, key);
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&Sha256::digest([b"center-rng".as_slice(), &key].concat()));
        let mut center = Self {
            config,
            master,
            rng: ChaCha20Rng::from_seed(seed),
            records: BTreeMap::new(),
            entries: Vec::new(),
            store: None,
        };
        let file = File::open(dir.join(LEDGER_FILE))?;
        let mut events = 0u64;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: LedgerEvent = serde_json::from_str(&line).map_err(|e| IncentiveError::Ledger {
                line: i + 1,
                detail: e.to_string(),
            })?;
            center.replay(&dir, i + 1, event)?;
            events += 1;
        }
        center.rng.set_stream(events);
        let ledger = BufWriter::new(OpenOptions::new().append(true).open(dir.join(LEDGER_FILE))?);
        center.store = Some(Store { dir, ledger });
        Ok(center)
    }

    fn replay(&mut self, dir: &Path, line: usize, event: LedgerEvent) -> Result<()> {
        let bad = |detail: String| IncentiveError::Ledger { line, detail };
        match event {
            LedgerEvent::Register { user, epsilon } => {
                self.insert_record(user, epsilon)?;
            }
            LedgerEvent::Publish {
                model_id,
                level,
                blob,
                task,
                accuracy,
                participants,
            } => {
                let bytes = fs::read(dir.join(BLOB_DIR).join(format!("{blob}.bin")))?;
                if sha256_hex(&bytes) != blob {
                    return Err(IncentiveError::BlobCorrupt(blob));
                }
                let ciphertext = ModelCiphertext::from_bytes(&bytes)?;
                if ciphertext.level() != level {
                    return Err(bad(format!("blob {blob} is sealed at level {}", ciphertext.level())));
                }
                self.entries.push(MarketEntry {
                    model_id,
                    level,
                    blob,
                    task,
                    accuracy,
                    participants,
                    accesses: 0,
                    ciphertext,
                });
            }
            LedgerEvent::Access { model_id, user } => {
                self.apply_access(&model_id, &user)?;
            }
            LedgerEvent::Credit { user, credits, .. } => {
                let held = self.records.get(&user).map(|r| r.credits());
                if held != Some(credits) {
                    return Err(bad(format!("credit line for {user} says {credits}, replay gives {held:?}")));
                }
            }
            LedgerEvent::Grant { .. } | LedgerEvent::Deny { .. } => {}
        }
        Ok(())
    }

    fn log(&mut self, event: &LedgerEvent) -> Result<()> {
        if let Some(store) = &mut self.store {
            serde_json::to_writer(&mut store.ledger, event)?;
            store.ledger.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(store) = &mut self.store {
            store.ledger.flush()?;
        }
        Ok(())
    }

    pub fn dir(&self) -> Option<&Path> {
        self.store.as_ref().map(|s| s.dir.as_path())
    }

    pub fn config(&self) -> &IncentiveConfig {
        &self.config
    }

    fn insert_record(&mut self, user: String, epsilon: f64) -> Result<()> {
        if self.records.contains_key(&user) {
            return Err(IncentiveError::DuplicateUser(user));
        }
        let record = ContributionRecord::new(user.clone(), epsilon, &self.config.credit_thresholds);
        self.records.insert(user, record);
        Ok(())
    }

    /// Registers a federation participant with its contribution weight.
    pub fn register(&mut self, user: &str, epsilon: f64) -> Result<&ContributionRecord> {
        self.insert_record(user.to_string(), epsilon)?;
        let epsilon = self.records[user].epsilon;
        self.log(&LedgerEvent::Register {
            user: user.to_string(),
            epsilon,
        })?;
        Ok(&self.records[user])
    }

    /// The unwrapping credential handed to a user out of band.
    pub fn credential(&self, user: &str) -> UserCredential {
        UserCredential::derive(&self.master, user)
    }

    pub fn record(&self, user: &str) -> Option<&ContributionRecord> {
        self.records.get(user)
    }

    pub fn records(&self) -> impl Iterator<Item = &ContributionRecord> {
        self.records.values()
    }

    pub fn entries(&self) -> &[MarketEntry] {
        &self.entries
    }

    pub fn entry(&self, model_id: &str) -> Option<&MarketEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    pub fn publish_model(
        &mut self,
        model: &ModelParams,
        level: Level,
        tag: ModelTag,
        participants: &[String],
    ) -> Result<&MarketEntry> {
        self.publish_bytes(&model.to_bytes(), level, tag, participants)
    }

    /// Seals `bytes` under the key for `level` and lists it in the market.
    pub fn publish_bytes(
        &mut self,
        bytes: &[u8],
        level: Level,
        tag: ModelTag,
        participants: &[String],
    ) -> Result<&MarketEntry> {
        let key = derive_level_key(&self.master, level)?;
        let ciphertext = encrypt_model(bytes, &key, &mut self.rng);
        let sealed = ciphertext.to_bytes();
        let blob = sha256_hex(&sealed);
        if let Some(store) = &self.store {
            fs::write(store.dir.join(BLOB_DIR).join(format!("{blob}.bin")), &sealed)?;
        }
        let model_id = format!("m{:04}", self.entries.len() + 1);
        self.log(&LedgerEvent::Publish {
            model_id: model_id.clone(),
            level,
            blob: blob.clone(),
            task: tag.task.clone(),
            accuracy: tag.accuracy,
            participants: participants.to_vec(),
        })?;
        self.entries.push(MarketEntry {
            model_id,
            level,
            blob,
            task: tag.task,
            accuracy: tag.accuracy,
            participants: participants.to_vec(),
            accesses: 0,
            ciphertext,
        });
        Ok(self.entries.last().unwrap())
    }

    /// Issues a freshly wrapped key for `target` if the user's level allows it.
    pub fn request_access(&mut self, user: &str, target: Level) -> Result<AccessDecision> {
        let held = self.records.get(user).and_then(|r| r.level());
        if !held.is_some_and(|l| l.dominates(target)) {
            self.log(&LedgerEvent::Deny {
                user: user.to_string(),
                requested: target,
                held,
            })?;
            return Ok(AccessDecision::Denied { held, requested: target });
        }
        let level_key = derive_level_key(&self.master, target)?;
        let usk = UserSecretKey::wrap(&self.master, user, &level_key, &mut self.rng);
        self.log(&LedgerEvent::Grant {
            user: user.to_string(),
            level: target,
        })?;
        Ok(AccessDecision::Granted(usk))
    }

    fn apply_access(&mut self, model_id: &str, user: &str) -> Result<Vec<CreditChange>> {
        let idx = self
            .entries
            .iter()
            .position(|e| e.model_id == model_id)
            .ok_or_else(|| IncentiveError::UnknownModel(model_id.to_string()))?;
        let level = self.entries[idx].level;
        let record = self
            .records
            .get(user)
            .ok_or_else(|| IncentiveError::UnknownUser(user.to_string()))?;
        if !record.may_access(level) {
            return Err(IncentiveError::Denied {
                user: user.to_string(),
                held: record.level().map_or("none".into(), |l| l.to_string()),
                requested: level,
            });
        }
        self.entries[idx].accesses += 1;
        let weight = self.config.level_weights.weight(level);
        let mut changes = Vec::new();
        for p in &self.entries[idx].participants {
            if let Some(r) = self.records.get_mut(p) {
                let delta = r.epsilon * weight;
                r.add_credits(delta, &self.config.credit_thresholds);
                changes.push(CreditChange {
                    user: p.clone(),
                    delta,
                    credits: r.credits(),
                    level: r.level(),
                });
            }
        }
        Ok(changes)
    }

    /// Counts one access by `user` and credits every participant of the model
    /// with `ε × level weight`.
    pub fn record_access(&mut self, model_id: &str, user: &str) -> Result<Vec<CreditChange>> {
        let changes = self.apply_access(model_id, user)?;
        self.log(&LedgerEvent::Access {
            model_id: model_id.to_string(),
            user: user.to_string(),
        })?;
        for c in &changes {
            self.log(&LedgerEvent::Credit {
                user: c.user.clone(),
                model_id: model_id.to_string(),
                delta: c.delta,
                credits: c.credits,
                level: c.level,
            })?;
        }
        Ok(changes)
    }

    /// Full user flow: obtain a key for the entry's level, unwrap it with the
    /// user's credential, decrypt, and record the access.
    pub fn open_model(&mut self, model_id: &str, user: &str, cred: &UserCredential) -> Result<Vec<u8>> {
        let level = self
            .entry(model_id)
            .ok_or_else(|| IncentiveError::UnknownModel(model_id.to_string()))?
            .level;
        let usk = match self.request_access(user, level)? {
            AccessDecision::Granted(k) => k,
            AccessDecision::Denied { held, requested } => {
                return Err(IncentiveError::Denied {
                    user: user.to_string(),
                    held: held.map_or("none".into(), |l| l.to_string()),
                    requested,
                })
            }
        };
        let key = usk.unwrap_key(cred)?;
        let bytes = decrypt_model_with(self.entry(model_id).unwrap().ciphertext(), &key)?;
        self.record_access(model_id, user)?;
        Ok(bytes)
    }
}

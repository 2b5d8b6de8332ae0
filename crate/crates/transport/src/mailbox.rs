//! In-process stand-in for the anonymous network: a per-round mailbox that
//! drops sender identity and releases envelopes in a seeded random order.

use crate::envelope::{CommitmentEntry, Pseudonym, SignedUpdate};
use crate::error::TransportError;
use fedring_crypto::HashCommitment;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};
use std::sync::Mutex;

#[derive(Debug, Default)]
pub struct RoundMailbox {
    round: u64,
    updates: Vec<SignedUpdate>,
    upload_pseudonyms: HashSet<Pseudonym>,
    commitments: Vec<CommitmentEntry>,
    commitment_pseudonyms: HashSet<Pseudonym>,
}

/// What one round delivers: uploads for the server, the commitment board for
/// participants.
#[derive(Debug, Clone)]
pub struct RoundDelivery {
    pub round: u64,
    pub updates: Vec<SignedUpdate>,
    pub board: CommitmentBoard,
}

/// Every commitment multicast during one round.
#[derive(Debug, Clone, Default)]
pub struct CommitmentBoard {
    entries: BTreeMap<Pseudonym, HashCommitment>,
}

impl CommitmentBoard {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &Pseudonym) -> Option<&HashCommitment> {
        self.entries.get(p)
    }

    /// Commitments for exactly `included`; `None` if any pseudonym is missing.
    pub fn select<'a>(&'a self, included: &[Pseudonym]) -> Option<Vec<&'a HashCommitment>> {
        included.iter().map(|p| self.entries.get(p)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pseudonym, &HashCommitment)> {
        self.entries.iter()
    }
}

impl RoundMailbox {
    pub fn new(round: u64) -> Self {
        Self {
            round,
            ..Default::default()
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn pending(&self) -> usize {
        self.updates.len()
    }

    /// Buffers an upload for the current round.
    pub fn submit_anonymous(&mut self, update: SignedUpdate) -> Result<(), TransportError> {
        if update.round != self.round {
            return Err(TransportError::WrongRound {
                expected: self.round,
                got: update.round,
            });
        }
        if !self.upload_pseudonyms.insert(update.pseudonym) {
            return Err(TransportError::DuplicatePseudonym(update.pseudonym.to_hex()));
        }
        self.updates.push(update);
        Ok(())
    }

    /// Posts a commitment under the pseudonym of an upload from this round.
    pub fn multicast_commitment(&mut self, entry: CommitmentEntry) -> Result<(), TransportError> {
        if entry.round != self.round {
            return Err(TransportError::WrongRound {
                expected: self.round,
                got: entry.round,
            });
        }
        if !self.upload_pseudonyms.contains(&entry.pseudonym) {
            return Err(TransportError::UnknownPseudonym(entry.pseudonym.to_hex()));
        }
        if !self.commitment_pseudonyms.insert(entry.pseudonym) {
            return Err(TransportError::DuplicatePseudonym(entry.pseudonym.to_hex()));
        }
        self.commitments.push(entry);
        Ok(())
    }

    /// Releases the round in a seeded uniform permutation and opens the next one.
    /// The permutation is applied to the envelopes in pseudonym order, so the
    /// output does not depend on the order in which submissions arrived.
    pub fn flush_round(&mut self, seed: u64) -> RoundDelivery {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut updates = std::mem::take(&mut self.updates);
        updates.sort_by_key(|u| u.pseudonym);
        updates.shuffle(&mut rng);
        let board = CommitmentBoard {
            entries: std::mem::take(&mut self.commitments)
                .into_iter()
                .map(|e| (e.pseudonym, e.commitment))
                .collect(),
        };
        self.upload_pseudonyms.clear();
        self.commitment_pseudonyms.clear();
        let round = self.round;
        self.round += 1;
        RoundDelivery { round, updates, board }
    }
}

/// Mailbox shared between connection handlers; every mutation is
/// linearized through the lock.
#[derive(Debug, Default)]
pub struct SharedMailbox {
    inner: Mutex<RoundMailbox>,
}

impl SharedMailbox {
    pub fn new(round: u64) -> Self {
        Self {
            inner: Mutex::new(RoundMailbox::new(round)),
        }
    }

    pub fn submit_anonymous(&self, update: SignedUpdate) -> Result<(), TransportError> {
        self.inner.lock().unwrap().submit_anonymous(update)
    }

    pub fn multicast_commitment(&self, entry: CommitmentEntry) -> Result<(), TransportError> {
        self.inner.lock().unwrap().multicast_commitment(entry)
    }

    pub fn flush_round(&self, seed: u64) -> RoundDelivery {
        self.inner.lock().unwrap().flush_round(seed)
    }

    pub fn round(&self) -> u64 {
        self.inner.lock().unwrap().round()
    }
}

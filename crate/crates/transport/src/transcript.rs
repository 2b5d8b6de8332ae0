//! JSON-lines log of everything that crossed the simulated network, and an
//! offline checker that replays the verifications from it.
//!
//! One object per line, discriminated by `"event"`:
//!
//! | event        | fields |
//! |--------------|--------|
//! | `setup`      | `chunk_width`, `scale`, `registered` (hex public keys) |
//! | `upload`     | `round`, `pseudonym`, `ring` (hex keys), `signature`, `params`, `accepted` |
//! | `commitment` | `round`, `pseudonym`, `commitment` |
//! | `aggregate`  | `round`, `count`, `included` (pseudonyms), `sum` |
//! | `client_check` | `round`, `passed` |
//!
//! Binary fields are standard base64 of the canonical encodings.

use crate::envelope::{CommitmentEntry, GlobalSum, Pseudonym, SignedUpdate};
use crate::error::TranscriptError;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use fedring_crypto::{
    hh_verify_sum, ring_verify, GroupParams, HashCommitment, PublicKey, QuantizedParams, RingSignature,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Setup {
        chunk_width: usize,
        scale: u64,
        registered: Vec<String>,
    },
    Upload {
        round: u64,
        pseudonym: String,
        ring: Vec<String>,
        signature: String,
        params: String,
        accepted: bool,
    },
    Commitment {
        round: u64,
        pseudonym: String,
        commitment: String,
    },
    Aggregate {
        round: u64,
        count: u32,
        included: Vec<String>,
        sum: String,
    },
    ClientCheck {
        round: u64,
        passed: bool,
    },
}

impl Event {
    pub fn setup(group: &GroupParams, scale: u64, registered: &[PublicKey]) -> Self {
        Event::Setup {
            chunk_width: group.chunk_width(),
            scale,
            registered: registered.iter().map(|pk| hex::encode(pk.as_bytes())).collect(),
        }
    }

    pub fn upload(u: &SignedUpdate, accepted: bool) -> Self {
        Event::Upload {
            round: u.round,
            pseudonym: u.pseudonym.to_hex(),
            ring: u.ring.iter().map(|pk| hex::encode(pk.as_bytes())).collect(),
            signature: B64.encode(u.signature.to_bytes()),
            params: B64.encode(u.params.to_bytes()),
            accepted,
        }
    }

    pub fn commitment(c: &CommitmentEntry) -> Self {
        Event::Commitment {
            round: c.round,
            pseudonym: c.pseudonym.to_hex(),
            commitment: B64.encode(c.commitment.to_bytes()),
        }
    }

    pub fn aggregate(g: &GlobalSum) -> Self {
        Event::Aggregate {
            round: g.round,
            count: g.count,
            included: g.included.iter().map(Pseudonym::to_hex).collect(),
            sum: B64.encode(g.sum.to_bytes()),
        }
    }
}

pub struct TranscriptWriter<W: Write> {
    out: W,
}

impl<W: Write> TranscriptWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn record(&mut self, event: &Event) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Outcome of replaying a transcript. Every count other than `rounds`,
/// `uploads` and `rejected_uploads` is a discrepancy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptReport {
    pub rounds: usize,
    pub uploads: usize,
    pub rejected_uploads: usize,
    /// Server verdicts that disagree with a fresh signature check.
    pub verdict_mismatches: usize,
    /// Aggregates whose sum is not the sum of the included accepted uploads.
    pub bad_sums: usize,
    /// Aggregates that fail the hash-sum check against the commitment board.
    pub hash_failures: usize,
    /// Aggregates naming pseudonyms that were rejected, unknown or repeated.
    pub bad_inclusions: usize,
    /// Logged client checks that disagree with the recomputed hash-sum check.
    pub check_mismatches: usize,
    /// Logged client checks that report failure.
    pub failed_client_checks: usize,
}

impl TranscriptReport {
    pub fn is_clean(&self) -> bool {
        self.verdict_mismatches == 0
            && self.bad_sums == 0
            && self.hash_failures == 0
            && self.bad_inclusions == 0
            && self.check_mismatches == 0
            && self.failed_client_checks == 0
    }
}

struct Upload {
    params: QuantizedParams,
    accepted: bool,
}

#[derive(Default)]
struct RoundState {
    uploads: HashMap<Pseudonym, Upload>,
    commitments: HashMap<Pseudonym, HashCommitment>,
    verified: Option<bool>,
}

fn b64(line: usize, what: &'static str, s: &str) -> Result<Vec<u8>, TranscriptError> {
    B64.decode(s).map_err(|_| TranscriptError::Field { line, what })
}

fn pseudonym(line: usize, s: &str) -> Result<Pseudonym, TranscriptError> {
    Pseudonym::from_hex(s).ok_or(TranscriptError::Field { line, what: "pseudonym" })
}

fn public_key(line: usize, s: &str) -> Result<PublicKey, TranscriptError> {
    let bytes: [u8; 32] = hex::decode(s)
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or(TranscriptError::Field { line, what: "public key" })?;
    PublicKey::from_bytes(&bytes).ok_or(TranscriptError::Field { line, what: "public key" })
}

/// Re-runs signature checks, sum recomputation and hash-sum verification
/// over a transcript. Rings containing unregistered keys count as invalid.
pub fn verify_transcript<R: BufRead>(input: R) -> Result<TranscriptReport, TranscriptError> {
    let mut report = TranscriptReport::default();
    let mut group: Option<GroupParams> = None;
    let mut registered = BTreeSet::new();
    let mut rounds: HashMap<u64, RoundState> = HashMap::new();

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|source| TranscriptError::Json { line: line_no, source })?;
        if let Event::Setup {
            chunk_width,
            registered: keys,
            ..
        } = &event
        {
            if *chunk_width == 0 {
                return Err(TranscriptError::Field {
                    line: line_no,
                    what: "chunk width",
                });
            }
            group = Some(GroupParams::new(*chunk_width));
            registered = keys
                .iter()
                .map(|k| public_key(line_no, k))
                .collect::<Result<BTreeSet<_>, _>>()?;
            continue;
        }
        let group = group.as_ref().ok_or(TranscriptError::MissingSetup(line_no))?;
        match event {
            Event::Setup { .. } => unreachable!(),
            Event::Upload {
                round,
                pseudonym: p,
                ring,
                signature,
                params,
                accepted,
            } => {
                let p = pseudonym(line_no, &p)?;
                let ring = ring
                    .iter()
                    .map(|k| public_key(line_no, k))
                    .collect::<Result<Vec<_>, _>>()?;
                let sig = RingSignature::from_bytes(&b64(line_no, "signature", &signature)?)
                    .map_err(|_| TranscriptError::Field { line: line_no, what: "signature" })?;
                let params = QuantizedParams::from_bytes(&b64(line_no, "params", &params)?)
                    .map_err(|_| TranscriptError::Field { line: line_no, what: "params" })?;
                let digest = fedring_crypto::digest_params(&params, round);
                let valid =
                    ring.iter().all(|pk| registered.contains(pk)) && ring_verify(group, &digest, &ring, &sig);
                report.uploads += 1;
                if !accepted {
                    report.rejected_uploads += 1;
                }
                if valid != accepted {
                    report.verdict_mismatches += 1;
                }
                rounds.entry(round).or_default().uploads.insert(p, Upload { params, accepted });
            }
            Event::Commitment {
                round,
                pseudonym: p,
                commitment,
            } => {
                let p = pseudonym(line_no, &p)?;
                let c = HashCommitment::from_bytes(&b64(line_no, "commitment", &commitment)?)
                    .map_err(|_| TranscriptError::Field { line: line_no, what: "commitment" })?;
                rounds.entry(round).or_default().commitments.insert(p, c);
            }
            Event::Aggregate {
                round,
                count,
                included,
                sum,
            } => {
                report.rounds += 1;
                let sum = QuantizedParams::from_bytes(&b64(line_no, "sum", &sum)?)
                    .map_err(|_| TranscriptError::Field { line: line_no, what: "sum" })?;
                let included = included
                    .iter()
                    .map(|p| pseudonym(line_no, p))
                    .collect::<Result<Vec<_>, _>>()?;
                let state = rounds.entry(round).or_default();
                let distinct: BTreeSet<_> = included.iter().collect();
                let members: Option<Vec<&Upload>> = included
                    .iter()
                    .map(|p| state.uploads.get(p).filter(|u| u.accepted))
                    .collect();
                if distinct.len() != included.len() || count as usize != included.len() || members.is_none() {
                    report.bad_inclusions += 1;
                }
                if let Some(members) = members {
                    let mut expected = QuantizedParams::zeros(sum.scale(), sum.len());
                    let shapes_ok = members.iter().all(|u| u.params.len() == sum.len());
                    if shapes_ok {
                        for u in &members {
                            expected.add_assign(&u.params);
                        }
                    }
                    if !shapes_ok || expected != sum {
                        report.bad_sums += 1;
                    }
                }
                let commitments: Option<Vec<&HashCommitment>> =
                    included.iter().map(|p| state.commitments.get(p)).collect();
                let ok = commitments.is_some_and(|cs| hh_verify_sum(group, &sum, cs));
                if !ok {
                    report.hash_failures += 1;
                }
                state.verified = Some(ok);
            }
            Event::ClientCheck { round, passed } => {
                if !passed {
                    report.failed_client_checks += 1;
                }
                match rounds.get(&round).and_then(|s| s.verified) {
                    Some(v) if v == passed => {}
                    _ => report.check_mismatches += 1,
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fedring_crypto::{hh_commit, keygen, ring_sign, FixedPoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn honest_log(perturb: bool) -> Vec<u8> {
        let group = GroupParams::new(4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let keys: Vec<_> = (0..3).map(|_| keygen(&group, &mut rng)).collect();
        let ring: Vec<_> = keys.iter().map(|k| *k.public()).collect();
        let codec = FixedPoint::default();
        let mut w = TranscriptWriter::new(Vec::new());
        w.record(&Event::setup(&group, codec.scale(), &ring)).unwrap();
        let mut sum = QuantizedParams::zeros(codec.scale(), 6);
        let mut included = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let params = codec.quantize(&[i as f64, -0.25, 3.0, 0.5, 1.0, -2.0]).unwrap();
            let p = Pseudonym::random(&mut rng);
            let digest = fedring_crypto::digest_params(&params, 0);
            let signature = ring_sign(&group, &digest, &ring, i, k, &mut rng).unwrap();
            let u = SignedUpdate {
                round: 0,
                pseudonym: p,
                params: params.clone(),
                ring: ring.clone(),
                signature,
            };
            w.record(&Event::upload(&u, true)).unwrap();
            w.record(&Event::commitment(&CommitmentEntry {
                round: 0,
                pseudonym: p,
                commitment: hh_commit(&group, &params),
            }))
            .unwrap();
            sum.add_assign(&params);
            included.push(p);
        }
        if perturb {
            sum.values_mut()[2] += fedring_crypto::Scalar::ONE;
        }
        w.record(&Event::aggregate(&GlobalSum {
            round: 0,
            count: 3,
            included,
            sum,
        }))
        .unwrap();
        w.record(&Event::ClientCheck { round: 0, passed: !perturb }).unwrap();
        w.into_inner()
    }

    #[test]
    fn honest_transcript_is_clean() {
        let report = verify_transcript(&honest_log(false)[..]).unwrap();
        assert!(report.is_clean(), "{report:?}");
        assert_eq!(report.uploads, 3);
        assert_eq!(report.rounds, 1);
    }

    #[test]
    fn perturbed_sum_flagged() {
        let report = verify_transcript(&honest_log(true)[..]).unwrap();
        assert_eq!(report.bad_sums, 1);
        assert_eq!(report.hash_failures, 1);
        assert_eq!(report.failed_client_checks, 1);
        assert_eq!(report.check_mismatches, 0);
        assert!(!report.is_clean());
    }

    #[test]
    fn flipped_verdict_flagged() {
        let log = String::from_utf8(honest_log(false)).unwrap();
        let log = log.replacen("\"accepted\":true", "\"accepted\":false", 1);
        let report = verify_transcript(log.as_bytes()).unwrap();
        assert_eq!(report.verdict_mismatches, 1);
        assert_eq!(report.bad_inclusions, 1);
    }

    #[test]
    fn missing_setup_and_garbage_lines() {
        assert!(matches!(
            verify_transcript(&br#"{"event":"client_check","round":0,"passed":true}"#[..]),
            Err(TranscriptError::MissingSetup(1))
        ));
        assert!(matches!(
            verify_transcript(&b"not json\n"[..]),
            Err(TranscriptError::Json { line: 1, .. })
        ));
    }
}

//! The full federation loop: setup, rounds of local training, anonymous
//! upload, signature checks, aggregation, client-side hash-sum checks, and
//! finally scoring, grading and publication through the incentive center.

use crate::config::{ExperimentConfig, ServerBehavior, Task, TransportMode};
use crate::data::{gen_synthetic, load_mnist_idx, partition_data, split_front, DataError};
use crate::metrics::{HashCheck, MetricsRow};
use crate::seeds::stream;
use crate::HarnessError;
use fedring_crypto::{
    digest_params, hh_commit, hh_verify_sum, keygen, ring_sign, ring_verify, FixedPoint, GroupParams, KeyPair,
    Level, PublicKey, QuantizedParams,
};
use fedring_flcore::{
    adversary_update, client_average, evaluate, fedavg_sum, has_converged, init_global_model, local_update,
    mean_loss, Hyperparams, LocalDataset, ModelArch, ModelParams,
};
use fedring_incentive::{
    grade_model, score_contribution, IncentiveCenter, ModelTag, PlaintextOracle,
};
use fedring_transport::socket::{collect_round, send_messages};
use fedring_transport::{
    apply_dropout, CommitmentEntry, DropoutPlan, Event, GlobalSum, Message, Pseudonym, RoundDelivery,
    RoundMailbox, SharedMailbox, SignedUpdate, TranscriptWriter,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::net::TcpListener;
use std::path::Path;
use std::time::Instant;

/// Train, oracle and test splits for one run.
pub struct Datasets {
    pub shards: Vec<LocalDataset>,
    pub oracle: LocalDataset,
    pub test: LocalDataset,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<Datasets, HarnessError> {
    let (train, test_full) = match cfg.task {
        Task::Mnist => {
            let d = &cfg.data;
            (
                load_mnist_idx(&d.train_images, &d.train_labels, "train")?,
                load_mnist_idx(&d.test_images, &d.test_labels, "test")?,
            )
        }
        Task::Synthetic => {
            let d = &cfg.data;
            let n = cfg.participants * cfg.samples_per_participant;
            (
                gen_synthetic(stream(cfg.seed, "synthetic-train", &[]), n, d.synthetic_classes, d.synthetic_dim)?,
                gen_synthetic(
                    stream(cfg.seed, "synthetic-test", &[]),
                    d.synthetic_test_size,
                    d.synthetic_classes,
                    d.synthetic_dim,
                )?,
            )
        }
    };
    let arch = cfg.arch();
    train.check_shape(arch.input_width(), arch.classes()).map_err(DataError::from)?;
    test_full.check_shape(arch.input_width(), arch.classes()).map_err(DataError::from)?;
    let shards = partition_data(
        &train,
        cfg.participants,
        cfg.samples_per_participant,
        stream(cfg.seed, "partition", &[]),
    )?;
    let (oracle, test) = split_front(&test_full, cfg.data.oracle_size)?;
    Ok(Datasets { shards, oracle, test })
}

struct Participant {
    key: KeyPair,
    ring: Vec<PublicKey>,
    adversary: bool,
}

/// Key setup by the KGC. Honest participants receive registered keys;
/// adversaries hold keys of their own that were never registered and put
/// them in their rings. When only one honest participant exists the KGC
/// registers a spare key so that a ring of two can be formed.
fn setup_keys(cfg: &ExperimentConfig, group: &GroupParams) -> (Vec<Participant>, Vec<PublicKey>) {
    let honest = cfg.honest();
    let mut kgc = ChaCha20Rng::seed_from_u64(stream(cfg.seed, "kgc", &[]));
    let registered_pairs: Vec<KeyPair> = (0..honest.max(2)).map(|_| keygen(group, &mut kgc)).collect();
    let mut registered: Vec<PublicKey> = registered_pairs.iter().map(|k| *k.public()).collect();
    registered.sort();
    let r = cfg.crypto.ring_size.min(registered.len()).max(2);

    let participants = (0..cfg.participants)
        .map(|i| {
            let adversary = i >= honest;
            let key = if adversary {
                keygen(group, &mut ChaCha20Rng::seed_from_u64(stream(cfg.seed, "adversary-key", &[i as u64])))
            } else {
                registered_pairs[i].clone()
            };
            let mut others: Vec<PublicKey> = registered.iter().copied().filter(|pk| pk != key.public()).collect();
            others.shuffle(&mut ChaCha8Rng::seed_from_u64(stream(cfg.seed, "ring", &[i as u64])));
            let mut ring: Vec<PublicKey> = others.into_iter().take(r - 1).collect();
            ring.push(*key.public());
            ring.sort();
            Participant { key, ring, adversary }
        })
        .collect();
    (participants, registered)
}

/// Everything one participant sends in one round.
struct Upload {
    update: SignedUpdate,
    commitment: CommitmentEntry,
    adversary: bool,
}

struct RoundCtx<'a> {
    cfg: &'a ExperimentConfig,
    group: &'a GroupParams,
    codec: &'a FixedPoint,
    shards: &'a [LocalDataset],
    participants: &'a [Participant],
    global: &'a ModelParams,
    attempt: u64,
}

fn participant_step(ctx: &RoundCtx<'_>, i: usize) -> Result<Upload, HarnessError> {
    let cfg = ctx.cfg;
    let p = &ctx.participants[i];
    let seed = stream(cfg.seed, "train", &[i as u64, ctx.attempt]);
    let local = if p.adversary {
        adversary_update(
            &cfg.adversary,
            ctx.global,
            Some(&ctx.shards[i]),
            &cfg.hyperparams,
            cfg.crypto.bound as f64,
            seed,
        )?
    } else {
        local_update(&ctx.shards[i], ctx.global, &cfg.hyperparams, seed)?
    };
    let params = ctx.codec.quantize(local.values())?;
    let mut rng = ChaCha20Rng::seed_from_u64(stream(cfg.seed, "sign", &[i as u64, ctx.attempt]));
    let signer = p.ring.iter().position(|pk| pk == p.key.public()).expect("own key is in the ring");
    let digest = digest_params(&params, ctx.attempt);
    let signature = ring_sign(ctx.group, &digest, &p.ring, signer, &p.key, &mut rng)?;
    let pseudonym = Pseudonym::random(&mut rng);
    let commitment = hh_commit(ctx.group, &params);
    Ok(Upload {
        update: SignedUpdate {
            round: ctx.attempt,
            pseudonym,
            params,
            ring: p.ring.clone(),
            signature,
        },
        commitment: CommitmentEntry {
            round: ctx.attempt,
            pseudonym,
            commitment,
        },
        adversary: p.adversary,
    })
}

/// Result of [`run_experiment`].
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricsRow>,
    pub final_model: ModelParams,
    pub final_accuracy: f64,
    /// `(user id, ε)` for every honest participant.
    pub epsilons: Vec<(String, f64)>,
    pub published: Option<(String, Level)>,
    pub adversary_submissions: usize,
    pub adversary_rejections: usize,
    pub center: IncentiveCenter,
}

impl ExperimentOutcome {
    pub fn rejected_signatures(&self) -> usize {
        self.rows.iter().map(|r| r.rejected_signatures).sum()
    }

    pub fn hash_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.hash_check == HashCheck::Fail).count()
    }

    /// True when no signature was rejected and every hash-sum check passed.
    pub fn all_verifications_passed(&self) -> bool {
        self.rejected_signatures() == 0 && self.hash_failures() == 0
    }

    pub fn metrics_csv(&self) -> String {
        crate::metrics::metrics_csv(&self.config, &self.rows)
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.accuracy).collect()
    }
}

fn server_accepts(
    cfg: &ExperimentConfig,
    group: &GroupParams,
    registered: &BTreeSet<PublicKey>,
    param_count: usize,
    u: &SignedUpdate,
) -> bool {
    if u.params.len() != param_count {
        return false;
    }
    if !cfg.verification {
        return true;
    }
    u.ring.len() >= 2
        && u.ring.iter().all(|pk| registered.contains(pk))
        && ring_verify(group, &digest_params(&u.params, u.round), &u.ring, &u.signature)
}

/// Moves one round's uploads through the configured channel.
fn deliver(
    mode: TransportMode,
    listener: Option<&TcpListener>,
    attempt: u64,
    uploads: Vec<(SignedUpdate, CommitmentEntry)>,
    shuffle_seed: u64,
) -> Result<RoundDelivery, HarnessError> {
    match mode {
        TransportMode::Memory => {
            let mut mb = RoundMailbox::new(attempt);
            for (u, c) in uploads {
                mb.submit_anonymous(u)?;
                mb.multicast_commitment(c)?;
            }
            Ok(mb.flush_round(shuffle_seed))
        }
        TransportMode::Socket => {
            let listener = listener.expect("socket mode binds a listener");
            let addr = listener.local_addr()?;
            let mb = SharedMailbox::new(attempt);
            let n = uploads.len();
            let results = std::thread::scope(|scope| -> Result<_, HarnessError> {
                let collector = scope.spawn(|| collect_round(listener, &mb, n));
                for (u, c) in uploads {
                    send_messages(addr, &[Message::SignedUpdate(u), Message::Commitment(c)])?;
                }
                Ok(collector.join().expect("collector thread panicked")?)
            })?;
            for r in results {
                r?;
            }
            Ok(mb.flush_round(shuffle_seed))
        }
    }
}

/// Runs one experiment. With `out_dir`, the market ledger goes to
/// `out_dir/market/<experiment id>/` and, if enabled, the transcript to
/// `out_dir/<experiment id>/transcript.jsonl`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    pool.install(|| run_inner(cfg, out_dir))
}

fn run_inner(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome, HarnessError> {
    let data = prepare_data(cfg)?;
    let arch: ModelArch = cfg.arch();
    let codec = cfg.codec();
    let group = GroupParams::new(cfg.crypto.chunk_width);
    let hp: &Hyperparams = &cfg.hyperparams;
    let (participants, registered) = setup_keys(cfg, &group);
    let registered_set: BTreeSet<PublicKey> = registered.iter().copied().collect();
    let honest = cfg.honest();
    let user_ids: Vec<String> = (0..honest).map(|i| format!("p{i}")).collect();
    log::info!(
        "experiment {}: {} participants ({} adversarial), arch {}, {} registered keys",
        cfg.experiment_id,
        cfg.participants,
        cfg.adversaries,
        arch,
        registered.len()
    );

    let global0 = init_global_model(&arch, stream(cfg.seed, "init", &[]));

    // contribution weights come from each user's own model, before federation
    let oracle = PlaintextOracle::new(data.oracle.clone(), arch.classes())?;
    let scoring_hp = Hyperparams {
        local_epochs: cfg.scoring_epochs,
        ..hp.clone()
    };
    let local_models: Vec<ModelParams> = (0..honest)
        .into_par_iter()
        .map(|i| local_update(&data.shards[i], &global0, &scoring_hp, stream(cfg.seed, "score", &[i as u64])))
        .collect::<Result<_, _>>()?;
    let epsilons: Vec<(String, f64)> = local_models
        .iter()
        .zip(&user_ids)
        .map(|(m, id)| Ok((id.clone(), score_contribution(m, &oracle, cfg.incentive.epsilon_rule)?)))
        .collect::<Result<_, HarnessError>>()?;

    let mut transcript = match (cfg.transport.transcript, out_dir) {
        (true, Some(dir)) => {
            let dir = dir.join(&cfg.experiment_id);
            std::fs::create_dir_all(&dir)?;
            let mut w = TranscriptWriter::new(BufWriter::new(File::create(dir.join("transcript.jsonl"))?));
            w.record(&Event::setup(&group, codec.scale(), &registered))?;
            Some(w)
        }
        _ => None,
    };
    let listener = match cfg.transport.mode {
        TransportMode::Socket => Some(TcpListener::bind(("127.0.0.1", cfg.transport.port))?),
        TransportMode::Memory => None,
    };

    let dropout = DropoutPlan::new(cfg.dropout, stream(cfg.seed, "dropout", &[]));
    let max_attempts = 4 * hp.max_rounds + 16;
    let mut global = global0;
    let mut counted = 0usize;
    let mut rows = Vec::new();
    let mut prev_sum: Option<QuantizedParams> = None;
    let mut adversary_submissions = 0;
    let mut adversary_rejections = 0;

    for attempt in 0..max_attempts as u64 {
        let started = Instant::now();
        let ctx = RoundCtx {
            cfg,
            group: &group,
            codec: &codec,
            shards: &data.shards,
            participants: &participants,
            global: &global,
            attempt,
        };
        let active: Vec<usize> = apply_dropout(&dropout, attempt, (0..cfg.participants).collect());
        let dropped = cfg.participants - active.len();
        let uploads: Vec<Upload> = active
            .par_iter()
            .map(|&i| participant_step(&ctx, i))
            .collect::<Result<_, _>>()?;
        let submitted = uploads.len();
        let adversarial: BTreeSet<Pseudonym> =
            uploads.iter().filter(|u| u.adversary).map(|u| u.update.pseudonym).collect();
        adversary_submissions += adversarial.len();

        let delivery = deliver(
            cfg.transport.mode,
            listener.as_ref(),
            attempt,
            uploads.into_iter().map(|u| (u.update, u.commitment)).collect(),
            stream(cfg.seed, "shuffle", &[attempt]),
        )?;
        let delivered = delivery.updates.len();

        let mut accepted = Vec::new();
        let mut rejected = 0;
        for u in &delivery.updates {
            let ok = server_accepts(cfg, &group, &registered_set, arch.param_count(), u);
            if let Some(w) = transcript.as_mut() {
                w.record(&Event::upload(u, ok))?;
            }
            if ok {
                accepted.push(u);
            } else {
                rejected += 1;
                if adversarial.contains(&u.pseudonym) {
                    adversary_rejections += 1;
                }
            }
        }
        if let Some(w) = transcript.as_mut() {
            for (p, c) in delivery.board.iter() {
                w.record(&Event::commitment(&CommitmentEntry {
                    round: attempt,
                    pseudonym: *p,
                    commitment: c.clone(),
                }))?;
            }
        }

        let row_base = MetricsRow {
            round: counted,
            attempt: attempt as usize,
            accuracy: 0.0,
            loss: 0.0,
            submitted,
            dropped,
            delivered,
            rejected_signatures: rejected,
            included: accepted.len(),
            hash_check: HashCheck::Skipped,
            wall_seconds: 0.0,
        };

        if accepted.is_empty() {
            // nothing to aggregate: the server re-broadcasts the current model
            log::warn!("attempt {attempt}: no update survived, round not counted");
            let mut row = row_base;
            row.accuracy = evaluate(&global, &data.test)?;
            row.loss = mean_loss(&global, &data.test)?;
            row.wall_seconds = started.elapsed().as_secs_f64();
            rows.push(row);
            continue;
        }

        let (true_sum, n) = fedavg_sum(accepted.iter().map(|u| &u.params))?;
        let claimed = match cfg.server {
            ServerBehavior::Honest => true_sum.clone(),
            ServerBehavior::Stale => prev_sum.clone().unwrap_or_else(|| true_sum.clone()),
            ServerBehavior::Perturb => {
                let mut s = true_sum.clone();
                s.values_mut()[0] += fedring_crypto::Scalar::ONE;
                s
            }
        };
        prev_sum = Some(true_sum);
        let broadcast = GlobalSum {
            round: attempt,
            count: n as u32,
            included: accepted.iter().map(|u| u.pseudonym).collect(),
            sum: claimed,
        };
        if let Some(w) = transcript.as_mut() {
            w.record(&Event::aggregate(&broadcast))?;
        }

        // every honest client holds the same board and broadcast, so one check stands for all
        let passed = broadcast.count as usize == broadcast.included.len()
            && delivery
                .board
                .select(&broadcast.included)
                .is_some_and(|cs| hh_verify_sum(&group, &broadcast.sum, cs));
        if let Some(w) = transcript.as_mut() {
            w.record(&Event::ClientCheck { round: attempt, passed })?;
        }
        counted += 1;
        let next = if passed {
            client_average(&broadcast.sum, n, &arch, &codec)?
        } else {
            log::warn!("attempt {attempt}: aggregate failed the hash-sum check, clients keep the previous model");
            global.clone()
        };
        let converged = passed && has_converged(&global, &next, hp.tolerance, counted, hp.max_rounds);
        global = next;

        let mut row = row_base;
        row.round = counted;
        row.hash_check = if passed { HashCheck::Pass } else { HashCheck::Fail };
        row.accuracy = evaluate(&global, &data.test)?;
        row.loss = mean_loss(&global, &data.test)?;
        row.wall_seconds = started.elapsed().as_secs_f64();
        log::debug!(
            "round {counted}: accuracy {:.4}, {} included, {} rejected",
            row.accuracy,
            row.included,
            row.rejected_signatures
        );
        rows.push(row);
        if converged || counted >= hp.max_rounds {
            break;
        }
    }
    if counted < hp.max_rounds && rows.len() >= max_attempts {
        log::warn!("stopped after {max_attempts} attempts with {counted} counted rounds");
    }
    if let Some(mut w) = transcript {
        w.flush()?;
    }

    let final_accuracy = evaluate(&global, &data.test)?;
    let center_seed = stream(cfg.seed, "center", &[]);
    let mut center = match out_dir {
        Some(dir) => IncentiveCenter::create(cfg.incentive.clone(), center_seed, &dir.join("market"), &cfg.experiment_id)?,
        None => IncentiveCenter::new(cfg.incentive.clone(), center_seed)?,
    };
    for (id, eps) in &epsilons {
        center.register(id, *eps)?;
    }
    let level = grade_model(final_accuracy, &cfg.incentive.grade_thresholds);
    let task = match cfg.task {
        Task::Mnist => "mnist",
        Task::Synthetic => "synthetic",
    };
    let model_id = center
        .publish_model(
            &global,
            level,
            ModelTag {
                task: task.into(),
                accuracy: final_accuracy,
            },
            &user_ids,
        )?
        .model_id
        .clone();
    center.flush()?;

    Ok(ExperimentOutcome {
        config: cfg.clone(),
        rows,
        final_model: global,
        final_accuracy,
        epsilons,
        published: Some((model_id, level)),
        adversary_submissions,
        adversary_rejections,
        center,
    })
}

/// Runs and writes `metrics.csv`, `timings.csv` and `final_model.bin` under
/// `out_dir/<experiment id>/`.
pub fn run_and_write(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome, HarnessError> {
    let outcome = run_experiment(cfg, Some(out_dir))?;
    let dir = out_dir.join(&cfg.experiment_id);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("metrics.csv"), outcome.metrics_csv())?;
    std::fs::write(dir.join("timings.csv"), crate::metrics::timings_csv(&outcome.rows))?;
    std::fs::write(dir.join("final_model.bin"), outcome.final_model.to_bytes())?;
    Ok(outcome)
}

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedring::bench::{bench_crypto, BenchConfig};
use fedring::config::{ExperimentConfig, Overrides, ServerBehavior, Task, TransportMode};
use fedring::experiment::run_and_write;
use fedring_crypto::Level;
use fedring_incentive::{IncentiveCenter, IncentiveConfig};
use fedring_transport::verify_transcript;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fedring", version, about = "Verifiable anonymous federated learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Time ring signing against per-parameter Paillier encryption.
    Bench(BenchArgs),
    /// Inspect the model market of a finished run.
    Market {
        #[command(subcommand)]
        command: MarketCommand,
    },
    /// Replay the checks recorded in a transcript.
    VerifyTranscript { log: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl From<OnOff> for bool {
    fn from(v: OnOff) -> bool {
        matches!(v, OnOff::On)
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or a metrics CSV whose header block is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    experiment_id: Option<String>,
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    #[arg(long)]
    participants: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    adversaries: Option<usize>,
    #[arg(long, value_enum)]
    verification: Option<OnOff>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_parser = parse_server)]
    server: Option<ServerBehavior>,
    #[arg(long, value_parser = parse_transport)]
    transport: Option<TransportMode>,
    #[arg(long, value_enum)]
    transcript: Option<OnOff>,
}

fn parse_task(s: &str) -> Result<Task, String> {
    match s {
        "mnist" => Ok(Task::Mnist),
        "synthetic" => Ok(Task::Synthetic),
        _ => Err("expected mnist or synthetic".into()),
    }
}

fn parse_server(s: &str) -> Result<ServerBehavior, String> {
    match s {
        "honest" => Ok(ServerBehavior::Honest),
        "stale" => Ok(ServerBehavior::Stale),
        "perturb" => Ok(ServerBehavior::Perturb),
        _ => Err("expected honest, stale or perturb".into()),
    }
}

fn parse_transport(s: &str) -> Result<TransportMode, String> {
    match s {
        "memory" => Ok(TransportMode::Memory),
        "socket" => Ok(TransportMode::Socket),
        _ => Err("expected memory or socket".into()),
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Write the timing table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 330_100)]
    elements: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 10, 100])]
    ring_sizes: Vec<usize>,
    #[arg(long, default_value_t = 9)]
    repeats: usize,
    #[arg(long, default_value_t = 2048)]
    paillier_bits: usize,
    #[arg(long, default_value_t = 20)]
    paillier_samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct MarketLocation {
    /// Market root, `<out>/market` of a run.
    #[arg(long, default_value = "out/market")]
    dir: PathBuf,
    #[arg(long, default_value = "default")]
    experiment: String,
    /// Config of the run, for its incentive thresholds.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MarketCommand {
    /// List published models and contribution records.
    Ls(MarketLocation),
    /// Decrypt a model as a given user, if their level allows it.
    Get {
        #[command(flatten)]
        at: MarketLocation,
        #[arg(long)]
        model: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type BoxResult<T> = Result<T, Box<dyn std::error::Error>>;

fn real_main() -> BoxResult<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Bench(args) => bench(args),
        Command::Market { command } => market(command),
        Command::VerifyTranscript { log } => {
            let report = verify_transcript(BufReader::new(std::fs::File::open(&log)?))?;
            println!("{report:#?}");
            Ok(if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn run(args: RunArgs) -> BoxResult<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        experiment_id: args.experiment_id,
        task: args.task,
        participants: args.participants,
        samples_per_participant: args.samples,
        adversaries: args.adversaries,
        verification: args.verification.map(Into::into),
        dropout: args.dropout,
        seed: args.seed,
        threads: args.threads,
        max_rounds: args.rounds,
        server: args.server,
        transport: args.transport,
        transcript: args.transcript.map(Into::into),
    });
    let outcome = run_and_write(&cfg, &args.out)?;
    let dir = args.out.join(&cfg.experiment_id);
    println!(
        "final accuracy {:.4} after {} rounds; {} signatures rejected, {} hash-sum failures",
        outcome.final_accuracy,
        outcome.rows.last().map_or(0, |r| r.round),
        outcome.rejected_signatures(),
        outcome.hash_failures()
    );
    if let Some((id, level)) = &outcome.published {
        println!("published {id} at level {level}");
    }
    println!("metrics: {}", dir.join("metrics.csv").display());
    Ok(if outcome.all_verifications_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn bench(args: BenchArgs) -> BoxResult<ExitCode> {
    let report = bench_crypto(&BenchConfig {
        elements: args.elements,
        ring_sizes: args.ring_sizes,
        ring_repeats: args.repeats,
        paillier_bits: args.paillier_bits,
        paillier_samples: args.paillier_samples,
        extrapolate: vec![10, args.elements as u64],
        seed: args.seed,
    })?;
    let csv = report.to_csv();
    match args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(&largest) = report.ring.iter().map(|r| &r.ring_size).max() {
        eprintln!(
            "ring size {largest} / Paillier total: {:.3e}",
            report.ratio(largest).unwrap_or(f64::NAN)
        );
    }
    Ok(if report.paillier.homomorphic_check {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn open_market(at: &MarketLocation) -> BoxResult<IncentiveCenter> {
    let cfg = match &at.config {
        Some(p) => ExperimentConfig::load(p)?.incentive,
        None => IncentiveConfig::default(),
    };
    Ok(IncentiveCenter::open(cfg, &at.dir, &at.experiment)?)
}

fn market(cmd: MarketCommand) -> BoxResult<ExitCode> {
    match cmd {
        MarketCommand::Ls(at) => {
            let center = open_market(&at)?;
            println!("model\tlevel\ttask\taccuracy\taccesses\tblob");
            for e in center.entries() {
                println!(
                    "{}\t{}\t{}\t{:.4}\t{}\t{}",
                    e.model_id, e.level, e.task, e.accuracy, e.accesses, e.blob
                );
            }
            println!();
            println!("user\tepsilon\tcredits\tlevel");
            for r in center.records() {
                println!(
                    "{}\t{:.4}\t{:.3}\t{}",
                    r.user_id,
                    r.epsilon,
                    r.credits(),
                    r.level().map_or("-".to_string(), |l: Level| l.to_string())
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        MarketCommand::Get { at, model, user, out } => {
            let mut center = open_market(&at)?;
            let cred = center.credential(&user);
            let bytes = center.open_model(&model, &user, &cred)?;
            center.flush()?;
            std::fs::write(&out, bytes)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

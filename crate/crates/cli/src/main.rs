//! `qsteg`: reproducible CSV artifacts for the steganography simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use qsteg::codes::ErrorPartition;
use qsteg::experiment::{
    p2_block_key_bits, p2_window, parse_message_bits, run, ChannelKind, ExperimentConfig, KeySource, RunOptions, Verb,
};
use qsteg::keysource::KeyStream;
use qsteg::protocol2::{decode_p2, encode_p2, message_to_bits, P2Block, StegoParams2};
use qsteg::StegoError;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] StegoError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(StegoError::KeyExhausted { .. }) => 3,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(
                StegoError::InvalidParameter(_)
                | StegoError::InvalidKey(_)
                | StegoError::EmptyWindow(_)
                | StegoError::UnsupportedChannel(_)
                | StegoError::LengthMismatch { .. }
                | StegoError::MessageOutOfRange(_)
                | StegoError::Infeasible(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "qsteg", version, about = "Steganography in quantum channel noise: calculators and simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key consumption rate of protocol 1 over a grid of p.
    Kcr(Common),
    /// Rate table for both protocols.
    Rates(Common),
    /// Diamond norms, optimal distinguishing probability and the closeness bound.
    Security(Common),
    /// Protocol 1 Monte-Carlo run.
    SimulateP1(Common),
    /// Protocol 2 Monte-Carlo run (noiseless partition, or the noisy codebook with --noisy).
    SimulateP2(Common),
    /// Monte-Carlo eavesdropper against the protocol 1 encoder.
    Eve(Common),
    /// Encode one protocol 2 message file into a block JSON.
    P2Encode(P2Encode),
    /// Decode a protocol 2 block JSON back to a message file.
    P2Decode(P2Decode),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test-mode key seed. Not secret.
    #[arg(long, conflicts_with = "key_file")]
    seed: Option<u64>,
    /// Hex-encoded key material, consumed sequentially.
    #[arg(long)]
    key_file: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long = "delta-p", value_delimiter = ',')]
    delta_p: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_channel)]
    channel: Option<ChannelKind>,
    /// Use the noisy codebook variant of protocol 2.
    #[arg(long)]
    noisy: bool,
    /// Include hidden fields in block traces.
    #[arg(long)]
    reveal: bool,
    /// JSON-lines block trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for partition and codebook JSON.
    #[arg(long)]
    artifact_dir: Option<PathBuf>,
}

#[derive(Args)]
struct P2Encode {
    #[command(flatten)]
    common: Common,
    /// Message as `0`/`1` text, exactly as many bits as the partition carries.
    #[arg(long)]
    message: PathBuf,
    /// Reuse a partition JSON instead of rebuilding it from the config.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Write the partition used.
    #[arg(long)]
    partition_out: Option<PathBuf>,
}

#[derive(Args)]
struct P2Decode {
    #[command(flatten)]
    common: Common,
    /// Block JSON written by p2-encode.
    #[arg(long)]
    block: PathBuf,
    #[arg(long)]
    partition: Option<PathBuf>,
}

fn parse_channel(s: &str) -> Result<ChannelKind, String> {
    match s {
        "bsc" => Ok(ChannelKind::Bsc),
        "depolarizing" | "dc" => Ok(ChannelKind::Depolarizing),
        other => Err(format!("unknown channel {other:?} (bsc or depolarizing)")),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Config file merged with flag overrides, verb pinned to the subcommand.
fn load_config(args: &Common, verb: Verb) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json(&read(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = cfg.verb.filter(|&v| v != verb) {
        return Err(CliError::Config(format!("config is for verb {}, not {}", v.name(), verb.name())));
    }
    cfg.verb = Some(verb);
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field.clone() { cfg.$field = v; })*};
    }
    set!(trials, blocks, p, n, delta, delta_p, channel);
    cfg.noisy |= args.noisy;
    if args.seed.is_some() {
        cfg.seed = args.seed;
        cfg.key_file = None;
    }
    if args.key_file.is_some() {
        cfg.key_file = args.key_file.clone();
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    Ok(cfg)
}

fn key_source(cfg: &ExperimentConfig, required: bool) -> CliResult<KeySource> {
    if let Some(path) = &cfg.key_file {
        return Ok(KeySource::Stream(KeyStream::from_hex(&read(path)?)?));
    }
    match cfg.seed {
        Some(seed) => {
            if required {
                eprintln!("WARNING: NON-SECRET test-mode key derived from --seed {seed}");
            }
            Ok(KeySource::Seed(seed))
        }
        None if required => Err(CliError::Config("this verb needs --seed or --key-file".into())),
        None => Ok(KeySource::Seed(0)),
    }
}

fn set_threads(cfg: &ExperimentConfig) -> CliResult<()> {
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run_verb(verb: Verb, args: &Common) -> CliResult<()> {
    let cfg = load_config(args, verb)?;
    set_threads(&cfg)?;
    let needs_key = matches!(verb, Verb::SimulateP1 | Verb::SimulateP2 | Verb::Eve);
    let mut key = key_source(&cfg, needs_key)?;
    let out = run(&cfg, &mut key, RunOptions { reveal: args.reveal })?;
    emit(cfg.out.as_deref(), &out.table.to_csv())?;
    if let Some(path) = &args.trace {
        write(path, &out.trace_jsonl())?;
    }
    if let Some(dir) = &args.artifact_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        for a in &out.artifacts {
            write(&dir.join(&a.name), &a.json)?;
        }
    }
    Ok(())
}

/// Protocol 2 parameters from a partition file or from the first grid point of the config.
fn p2_params(cfg: &ExperimentConfig, partition: Option<&Path>) -> CliResult<StegoParams2> {
    match partition {
        Some(path) => Ok(StegoParams2::from_partition(ErrorPartition::from_json(&read(path)?)?)),
        None => {
            let ts = p2_window(cfg, cfg.n[0], cfg.p[0], cfg.delta[0])?;
            Ok(StegoParams2::from_typical(&ts)?)
        }
    }
}

fn p2_key(cfg: &ExperimentConfig, params: &StegoParams2) -> CliResult<KeyStream> {
    match key_source(cfg, true)? {
        KeySource::Stream(k) => Ok(k),
        KeySource::Seed(s) => Ok(KeyStream::from_seed(s, p2_block_key_bits(params))),
    }
}

fn p2_encode(args: &P2Encode) -> CliResult<()> {
    let mut cfg = load_config(&args.common, Verb::SimulateP2)?;
    cfg.verb = None;
    let params = p2_params(&cfg, args.partition.as_deref())?;
    let (message, len) = parse_message_bits(&read(&args.message)?)?;
    if len != params.message_bits() {
        return Err(CliError::Config(format!(
            "message has {len} bits, the partition carries {}",
            params.message_bits()
        )));
    }
    let mut key = p2_key(&cfg, &params)?;
    let block = encode_p2(&message, &mut key, &params)?;
    let json = serde_json::to_string_pretty(&block).expect("block serializes");
    emit(cfg.out.as_deref(), &format!("{json}\n"))?;
    if let Some(path) = &args.partition_out {
        write(path, &params.partition.to_json())?;
    }
    Ok(())
}

fn p2_decode(args: &P2Decode) -> CliResult<()> {
    let mut cfg = load_config(&args.common, Verb::SimulateP2)?;
    cfg.verb = None;
    let params = p2_params(&cfg, args.partition.as_deref())?;
    let block: P2Block = serde_json::from_str(&read(&args.block)?)
        .map_err(|e| CliError::Config(format!("block JSON: {e}")))?;
    let mut key = p2_key(&cfg, &params)?;
    let message: BigUint = decode_p2(&block, &mut key, &params)?;
    let bits: String =
        message_to_bits(&message, params.message_bits()).iter().map(|&b| if b { '1' } else { '0' }).collect();
    emit(cfg.out.as_deref(), &format!("{bits}\n"))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Kcr(a) => run_verb(Verb::Kcr, &a),
        Command::Rates(a) => run_verb(Verb::Rates, &a),
        Command::Security(a) => run_verb(Verb::Security, &a),
        Command::SimulateP1(a) => run_verb(Verb::SimulateP1, &a),
        Command::SimulateP2(a) => run_verb(Verb::SimulateP2, &a),
        Command::Eve(a) => run_verb(Verb::Eve, &a),
        Command::P2Encode(a) => p2_encode(&a),
        Command::P2Decode(a) => p2_decode(&a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsteg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

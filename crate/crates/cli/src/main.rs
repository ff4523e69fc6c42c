//! `fakewidth`: reproducible batch jobs for the fake detection simulations.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use fakewidth::experiments::{bracket_with_config, invariance_check, sweep, SweepConfig};
use fakewidth::{estimate_scaled_width, focused_width_upper_bound, SeedSpec, WidthReport};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{FocusedConfig, InvarianceConfig, Seeded, WidthConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Scaled width estimate of a trick set.
    Width,
    /// Error rates over a grid of radii.
    Sweep,
    /// Bracket the detectability radius.
    Radius,
    /// Check that sign-flipped fakes have the law of the data.
    Invariance,
    /// Focused-width upper bound over candidate focus sets.
    Focused,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Width => "width",
            Command::Sweep => "sweep",
            Command::Radius => "radius",
            Command::Invariance => "invariance",
            Command::Focused => "focused",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fakewidth", version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Primary output file; sidecars are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "FAKEWIDTH_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {source}")]
    ParseConfig { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Run(#[from] fakewidth::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn is_bracket_failure(e: &fakewidth::Error) -> bool {
    match e {
        fakewidth::Error::Bracket(_) => true,
        fakewidth::Error::AtRadius { source, .. } => is_bracket_failure(source),
        _ => false,
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } | CliError::ParseConfig { .. } => "config",
            CliError::Run(e) if is_bracket_failure(e) => "bracket",
            CliError::Run(_) => "precondition",
            CliError::Write { .. } | CliError::Pool(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" => 2,
            "precondition" => 3,
            "bracket" => 4,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: u8,
}

/// Run metadata. Timestamps and the worker count live only here so that the
/// result files are identical across runs.
#[derive(Serialize)]
struct Metadata<'a, C: Serialize> {
    command: &'static str,
    config: &'a C,
    seed: u64,
    workers: usize,
    outputs: Vec<String>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn read_config<C: DeserializeOwned + Seeded>(path: &Path, seed: Option<u64>) -> Result<C, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::ReadConfig { path: path.to_owned(), source })?;
    let mut cfg: C = serde_json::from_str(&text)
        .map_err(|source| CliError::ParseConfig { path: path.to_owned(), source })?;
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<String, CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write { path: path.to_owned(), source })?;
    Ok(path.display().to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

/// `<out>` with its extension replaced by `ext`.
fn sibling(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

struct Job<'a> {
    cli: &'a Cli,
    workers: usize,
    started: u128,
}

impl Job<'_> {
    fn finish<C: Serialize + Seeded>(&self, cfg: &C, mut outputs: Vec<String>) -> Result<(), CliError> {
        let meta_path = sibling(&self.cli.out, "meta.json");
        outputs.insert(0, self.cli.out.display().to_string());
        let meta = Metadata {
            command: self.cli.command.name(),
            config: cfg,
            seed: cfg.seed(),
            workers: self.workers,
            outputs,
            started_unix_ms: self.started,
            finished_unix_ms: unix_ms(),
        };
        write(&meta_path, &to_json(&meta))?;
        Ok(())
    }

    fn run(&self) -> Result<(), CliError> {
        let cli = self.cli;
        match cli.command {
            Command::Width => {
                let cfg: WidthConfig = read_config(&cli.config, cli.seed)?;
                let est = estimate_scaled_width(
                    &cfg.trick_set,
                    &cfg.distribution,
                    cfg.samples,
                    &SeedSpec::new(cfg.seed),
                )?;
                let report = WidthReport::scaled(&cfg.trick_set, &cfg.distribution, &est)?;
                write(&cli.out, &to_json(&report))?;
                self.finish(&cfg, Vec::new())
            }
            Command::Sweep => {
                let cfg: SweepConfig = read_config(&cli.config, cli.seed)?;
                let res = sweep(&cfg)?;
                write(&cli.out, &res.to_csv())?;
                let mut outputs = Vec::new();
                for curve in ["fpr", "fnr", "success_rate"] {
                    let data = res.curve(curve).expect("known curve");
                    outputs.push(write(&sibling(&cli.out, &format!("{curve}.dat")), &data)?);
                }
                self.finish(&cfg, outputs)
            }
            Command::Radius => {
                let cfg: SweepConfig = read_config(&cli.config, cli.seed)?;
                let bracket = bracket_with_config(&cfg)?;
                write(&cli.out, &to_json(&bracket))?;
                self.finish(&cfg, Vec::new())
            }
            Command::Invariance => {
                let cfg: InvarianceConfig = read_config(&cli.config, cli.seed)?;
                let report = invariance_check(
                    &cfg.trick_set,
                    &cfg.distribution,
                    cfg.r,
                    cfg.trials,
                    &SeedSpec::new(cfg.seed),
                )?;
                write(&cli.out, &to_json(&report))?;
                self.finish(&cfg, Vec::new())
            }
            Command::Focused => {
                let cfg: FocusedConfig = read_config(&cli.config, cli.seed)?;
                let bound = focused_width_upper_bound(
                    &cfg.trick_set,
                    &cfg.candidates,
                    &cfg.distribution,
                    cfg.samples,
                    &SeedSpec::new(cfg.seed),
                )?;
                write(&cli.out, &to_json(&bound))?;
                self.finish(&cfg, Vec::new())
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.workers {
        builder = builder.num_threads(k as usize);
    }
    let pool = builder.build()?;
    let job = Job { cli, workers: pool.current_num_threads(), started: unix_ms() };
    pool.install(|| job.run())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord { error: e.kind(), message: e.to_string(), exit_code: e.exit_code() };
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::from(e.exit_code())
        }
    }
}

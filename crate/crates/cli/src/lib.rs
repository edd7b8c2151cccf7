//! Batch front end: one JSON scenario, one subcommand, one output directory.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] westervelt::error::Error),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Tolerance(String),
    #[error("{0}")]
    PipelineOrder(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Core(westervelt::error::Error::CascadeDivergence { .. }) => 2,
            Failure::Core(_) => 1,
            Failure::Divergence(_) => 2,
            Failure::Tolerance(_) => 3,
            Failure::PipelineOrder(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "westervelt", version, about = "Harmonic-cascade solver, time-domain oracle and coefficient inversion")]
pub struct Cli {
    /// Scenario JSON; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit nonzero when an enforced assertion fails.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Noise seed, overriding `inverse.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the harmonic cascade for the configured excitation.
    Forward,
    /// Compare the cascade with the time-stepped periodic steady state.
    OracleCompare,
    /// Run the estimate sweeps.
    Bounds,
    /// Print the exact h-sequence and its bound margins.
    Hseq {
        #[arg(long, default_value_t = 30)]
        count: usize,
    },
    /// Synthesize boundary data for the configured medium.
    MakeData,
    /// Recover α from second-harmonic traces.
    InvertAlpha {
        #[arg(long)]
        dataset: PathBuf,
        /// Directory written by `invert-mu`.
        #[arg(long, conflicts_with = "known_mu")]
        mu_result: Option<PathBuf>,
        /// Take (β, γ) from the configured medium.
        #[arg(long)]
        known_mu: bool,
    },
    /// Recover (β, γ) from first-harmonic traces.
    InvertMu {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Check the Schrödinger form of the fundamental problem.
    LiouvilleCheck,
    /// Compare the data of the medium and a perturbed one.
    Distinguish,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::OracleCompare => "oracle-compare",
            Command::Bounds => "bounds",
            Command::Hseq { .. } => "hseq",
            Command::MakeData => "make-data",
            Command::InvertAlpha { .. } => "invert-alpha",
            Command::InvertMu { .. } => "invert-mu",
            Command::LiouvilleCheck => "liouville-check",
            Command::Distinguish => "distinguish",
        }
    }
}

/// What a command sees: the effective config and where to write.
pub struct Context {
    pub config: ScenarioConfig,
    pub out: PathBuf,
    pub strict: bool,
    pub config_hash: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_sha256: Option<&'a str>,
    westervelt_version: &'a str,
    cli_version: &'a str,
    jobs: usize,
    seed: Option<u64>,
    exit_code: u8,
    error: Option<String>,
    wall_time_s: f64,
}

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Runs one command and returns its exit code. Errors go to standard error;
/// the run manifest is written whenever the output directory is usable.
pub fn run(cli: Cli) -> u8 {
    let start = Instant::now();
    if let Some(n) = cli.jobs {
        // only fails if a global pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let loaded = match &cli.config {
        Some(path) => ScenarioConfig::load(path),
        None => Ok(ScenarioConfig::default()),
    };
    let out_dir = cli.out.clone().or_else(|| loaded.as_ref().ok().map(|c| c.output.directory.clone()));
    let mut hash = None;
    let outcome = loaded.and_then(|mut config| {
        if let Some(seed) = cli.seed {
            config.inverse.seed = seed;
        }
        // the hash identifies the scenario, so it ignores where results go
        let config_hash = config_hash(&config)?;
        hash = Some(config_hash.clone());
        if let Some(out) = &cli.out {
            config.output.directory = out.clone();
        }
        let out = config.output.directory.clone();
        std::fs::create_dir_all(&out).map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;
        let ctx = Context { config, out, strict: cli.strict, config_hash };
        commands::dispatch(&ctx, &cli.command)
    });
    let (code, error) = match outcome {
        Ok(()) => (0, None),
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), Some(e.to_string()))
        }
    };
    if let Some(dir) = out_dir {
        let manifest = RunManifest {
            command: cli.command.name(),
            config_sha256: hash.as_deref(),
            westervelt_version: westervelt::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            jobs: rayon::current_num_threads(),
            seed: cli.seed,
            exit_code: code,
            error,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        if let Err(e) = write_json(&dir, MANIFEST_FILE, &manifest) {
            eprintln!("warning: run manifest not written: {e}");
        }
    }
    code
}

/// SHA-256 of the effective config's canonical JSON.
pub fn config_hash(config: &ScenarioConfig) -> Result<String, Failure> {
    let canonical = serde_json::to_vec(config).map_err(westervelt::error::Error::from)?;
    Ok(format!("{:x}", Sha256::digest(&canonical)))
}

pub(crate) fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(westervelt::error::Error::from)?;
    let text = serde_json::to_string_pretty(value).map_err(westervelt::error::Error::from)? + "\n";
    std::fs::write(dir.join(name), text).map_err(westervelt::error::Error::from)?;
    Ok(())
}

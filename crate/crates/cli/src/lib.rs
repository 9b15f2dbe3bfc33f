//! Configuration-driven experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod config;
pub mod model;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::battery::{run_battery, Context};
use crate::config::{ExperimentConfig, BATTERIES};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "RDLAB_THREADS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rdlab", version, about = "Monte Carlo verification batteries for stochastic reaction-diffusion models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the drift and noise hypotheses on a lattice.
    Validate(RunArgs),
    /// Simulate an ensemble and export sample paths.
    Simulate(RunArgs),
    /// Martingale-problem battery with quadratic variation and power control.
    Martingale(RunArgs),
    /// Coupled-path experiment for pathwise uniqueness.
    Uniqueness(RunArgs),
    /// Restart, Chapman-Kolmogorov and Feller checks.
    Markov(RunArgs),
    /// Level table of the regularizing functions.
    Regularizer(RunArgs),
    /// Every battery listed in the configuration.
    All(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration file, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the number of paths.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: Option<u64>,
    /// Override the seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Self::Validate(a) => ("validate", a),
            Self::Simulate(a) => ("simulate", a),
            Self::Martingale(a) => ("martingale", a),
            Self::Uniqueness(a) => ("uniqueness", a),
            Self::Markov(a) => ("markov", a),
            Self::Regularizer(a) => ("regularizer", a),
            Self::All(a) => ("all", a),
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
    if let Some(p) = args.paths {
        cfg.run.paths = usize::try_from(p).map_err(|_| format!("--paths {p} is too large"))?;
    }
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn selected(subcommand: &str, cfg: &ExperimentConfig) -> Vec<&'static str> {
    if subcommand == "all" {
        BATTERIES.iter().copied().filter(|b| cfg.test.batteries.iter().any(|c| c == b)).collect()
    } else {
        vec![BATTERIES.iter().copied().find(|b| *b == subcommand).expect("subcommands mirror batteries")]
    }
}

fn write_manifest(out: &Path, subcommand: &str, cfg: &ExperimentConfig, statuses: &[serde_json::Value]) -> std::io::Result<()> {
    let canonical = cfg.canonical();
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    let manifest = serde_json::json!({
        "tool": "rdlab",
        "cli_version": env!("CARGO_PKG_VERSION"),
        "core_version": rdlab_core::VERSION,
        "subcommand": subcommand,
        "config_sha256": hash,
        "seed": cfg.run.seed,
        "paths": cfg.run.paths,
        "batteries": statuses,
        "config": canonical,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(out.join("manifest.json"), text)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let (subcommand, args) = cli.command.parts();
    let cfg = match load_config(args).and_then(|c| configure_threads().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let model = match model::build_model(&cfg.model) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: invalid model: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return EXIT_CONFIG;
    }
    let ctx = Context { config: &cfg, model: &model, out: &args.out };
    let mut all_pass = true;
    let mut statuses = Vec::new();
    for name in selected(subcommand, &cfg) {
        let (status, summary, files) = match run_battery(name, &ctx) {
            Ok(o) => (if o.pass { "pass" } else { "fail" }, o.summary, o.files),
            Err(e) => ("error", e.to_string(), Vec::new()),
        };
        all_pass &= status == "pass";
        println!("{name}: {} {summary}", status.to_uppercase());
        statuses.push(serde_json::json!({ "name": name, "status": status, "summary": summary, "files": files }));
    }
    if let Err(e) = write_manifest(&args.out, subcommand, &cfg, &statuses) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_FAIL;
    }
    if all_pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

//! `berryfw` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 when the run finished but
//! some points, runs or checks failed.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use berryfw::verify::Suite;
use clap::{Parser, Subcommand};

use crate::commands::Status;
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "berryfw", version, about = "Semiclassical diagonalization of matrix Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Expansion order in ℏ (0, 1 or 2).
    #[arg(long, global = true)]
    order: Option<u8>,
    #[arg(long, global = true)]
    hbar: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Restrict `verify` to one suite: bracket, models, diagonalizer, dynamics, oracles.
    #[arg(long, global = true)]
    suite: Option<String>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Energy through the requested order at each configured point.
    Diagonalize,
    /// Berry connections at each point.
    Connections,
    /// Curvatures of the projected connections at each point.
    Curvature,
    /// Ray trajectories for the massless model.
    Trajectory,
    /// Property and reference-value suites.
    Verify,
    /// Random instances of the symbolic identities.
    BracketCheck,
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => match cli.command {
            Command::Verify | Command::BracketCheck => RunConfig::default(),
            _ => anyhow::bail!("--config is required for this command"),
        },
    };
    if let Some(o) = cli.order {
        cfg.order = o;
    }
    if let Some(h) = cli.hbar {
        cfg.hbar = h;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.verify.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let cfg = load(cli)?;
    let suites = match &cli.suite {
        Some(s) => vec![Suite::parse(s)?],
        None => Suite::ALL.to_vec(),
    };
    let out: &Path = &cli.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    match cli.command {
        Command::Diagonalize => commands::diagonalize(&cfg, out, &pool),
        Command::Connections => commands::connections(&cfg, out, &pool),
        Command::Curvature => commands::curvature(&cfg, out, &pool),
        Command::Trajectory => commands::trajectory(&cfg, out, &pool),
        Command::Verify => commands::verify(&cfg, &suites, out, &pool),
        Command::BracketCheck => commands::bracket(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial(msg)) => {
            eprintln!("berryfw: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("berryfw: error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line driver for `primix`: configuration, orchestration and
//! report files.

pub mod check;
pub mod config;
pub mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{env_overrides, parse_text, ConfigError, RunConfig};
use run::Console;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] primix::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(primix::Error::Io(_)) | CliError::Io(_) => 3,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "primix",
    version,
    about = "Stochastic primitive equations: simulation and mixing diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Chain steps (overrides `steps`).
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Ensemble size (overrides `ensemble`).
    #[arg(long, global = true)]
    pub ensemble: Option<usize>,
    /// Only errors are printed.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Run the invariant suite and print a pass/fail table.
    Check,
    /// Integrate the chain, writing norms.csv and optional snapshots.
    Simulate,
    /// Same-noise coupling of two nearby states, writing coupling.csv.
    Couple,
    /// Dual-Lipschitz mixing experiment, writing mixing.csv.
    Mixing,
    /// Gramian of the noise-to-state map, writing gramian.csv.
    Gramian,
}

impl Cli {
    fn flag_overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Some(s) = self.seed {
            m.insert("master_seed".into(), s.to_string());
        }
        if let Some(o) = &self.out {
            m.insert("out".into(), o.display().to_string());
        }
        if let Some(s) = self.steps {
            m.insert("steps".into(), s.to_string());
        }
        if let Some(e) = self.ensemble {
            m.insert("ensemble".into(), e.to_string());
        }
        m
    }

    /// Resolves the configuration from file, process environment and flags.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
                    key: "--config".into(),
                    reason: format!("{}: {e}", p.display()),
                })?;
                parse_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let env = env_overrides(std::env::vars())?;
        Ok(RunConfig::resolve(&file, &env, &self.flag_overrides())?)
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let cfg = match cli.resolve_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let con = Console { quiet: cli.quiet };
    let outcome = match cli.command {
        Command::Check => run::check(&cfg, &con),
        Command::Simulate => run::simulate(&cfg, &con),
        Command::Couple => run::couple(&cfg, &con),
        Command::Mixing => run::mixing(&cfg, &con),
        Command::Gramian => run::gramian(&cfg, &con),
    };
    match outcome {
        Ok(failed) if failed.is_empty() => 0,
        Ok(failed) => match run::write_failures(&cfg, &failed) {
            Ok(path) => {
                eprintln!("failed: {} (see {})", failed.join(", "), path.display());
                1
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            let name = match &e {
                CliError::Runtime(r) => runtime_name(r),
                _ => "io",
            };
            let _ = run::write_failures(&cfg, &[name.to_string()]);
            e.exit_code()
        }
    }
}

fn runtime_name(e: &primix::Error) -> &'static str {
    use primix::Error::*;
    match e {
        AbsorbingSetViolation { .. } => "absorbing_set",
        NonFiniteState { .. } => "finite_state",
        FitFailure(_) => "exponential_fit",
        EmptyEnsemble => "empty_ensemble",
        Snapshot(_) => "snapshot",
        Io(_) => "io",
        _ => "runtime",
    }
}

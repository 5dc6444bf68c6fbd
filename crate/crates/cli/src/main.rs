//! `cdlab`: numerical laboratory for singular sup-metric strip spaces.
//!
//! Subcommands: `validate-profile`, `verify-cd`, `convexity`,
//! `counterexample {branching|no-map|dimension|strict}`, `mgh`.
//! Exit codes: 0 pass (or evidence-grade completion), 1 error, 2 verified
//! failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CounterexampleKind;
use config::{ConfigFile, RunConfig};

#[derive(Parser)]
#[command(
    name = "cdlab",
    about = "entropy-convexity certificates and counterexample geometry for singular strip spaces"
)]
struct Cli {
    /// Sectioned key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV side files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid columns.
    #[arg(long, global = true)]
    nx: Option<usize>,
    /// Fiber cells per column.
    #[arg(long, global = true)]
    nu: Option<usize>,
    /// Profile scale bound.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Fiber concentration of the reference density.
    #[arg(long = "K", global = true)]
    big_k: Option<f64>,
    /// Dimension parameter for the pointwise criterion.
    #[arg(long, global = true)]
    nprime: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a profile against the admissible class and its closure.
    ValidateProfile,
    /// Run the pointwise criterion and midpoint entropy test on structured
    /// marginals.
    VerifyCd,
    /// Run the convexity certificate suite.
    Convexity,
    /// Demonstrate a singular phenomenon.
    Counterexample {
        #[arg(value_enum)]
        kind: CounterexampleKind,
    },
    /// Measured-convergence trace onto the singular space.
    Mgh,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(&ConfigFile::load(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.nx {
        cfg.nx = v;
    }
    if let Some(v) = cli.nu {
        cfg.nu = v;
    }
    if let Some(v) = cli.k {
        cfg.k = v;
    }
    if let Some(v) = cli.big_k {
        cfg.big_k = v;
    }
    if let Some(v) = cli.nprime {
        cfg.n_prime = v;
    }

    match cli.command {
        Command::ValidateProfile => commands::cmd_validate_profile(&cfg, &cli.out),
        Command::VerifyCd => commands::cmd_verify_cd(&cfg, &cli.out),
        Command::Convexity => commands::cmd_convexity(&cfg, &cli.out),
        Command::Counterexample { kind } => commands::cmd_counterexample(&cfg, kind, &cli.out),
        Command::Mgh => commands::cmd_mgh(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

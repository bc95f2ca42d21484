use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use superext_cli::commands;
use superext_cli::config::RunConfig;
use superext_cli::error::{Result, EXIT_TESTS_FAILED};

/// Simulation and verification tool for extremes of independent
/// stochastic processes.
#[derive(Parser)]
#[command(name = "superext", version, about)]
struct Cli {
    /// Path to a flat JSON configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override; required here or in the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override (default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize paths of the limit process and/or the triangular array.
    Simulate,
    /// Compare scaled array exceedance rates against the exponent measure.
    Convergence,
    /// Run the distributional verification suite (exit 1 on any failure).
    Test,
    /// Evaluate one joint threshold query theoretically and empirically.
    Fdd {
        /// Path to a JSON query: {"times": [...], "sites": [...],
        /// "thresholds": [[...], ...]} with one threshold row per time.
        #[arg(long)]
        query: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<bool> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply_overrides(cli.seed, cli.out.as_deref());
    cfg.validate_common()?;
    let out = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out)?;
    let mut resolved = serde_json::to_string_pretty(&cfg)?;
    resolved.push('\n');
    fs::write(out.join("resolved_config.json"), resolved)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &out),
        Command::Convergence => commands::cmd_convergence(&cfg, &out),
        Command::Test => commands::cmd_test(&cfg, &out),
        Command::Fdd { query } => commands::cmd_fdd(&cfg, &out, &query),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TESTS_FAILED),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

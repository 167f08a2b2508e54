//! Batch front end for `sysrisk-core`: reads a TOML run configuration and a
//! scenario file, runs one command and renders the report as aligned text
//! or JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use sysrisk_core::allocation::AllocationMethod;

use crate::commands::EXIT_OK;
use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, CliResult};
use crate::render::Render;

#[derive(Debug, Parser)]
#[command(name = "sysrisk", version, about = "Systemic risk measures and capital allocation on scenario sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Scenario file (CSV or JSON); overrides `scenarios` in the config.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Output format; overrides `format` in the config.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Seed for sampled checks; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the configured measure.
    Risk(Common),
    /// Allocate the systemic risk to the firms.
    Allocate {
        #[command(flatten)]
        common: Common,
        /// Allocation method; overrides `[allocation] method`.
        #[arg(long)]
        method: Option<String>,
    },
    /// Run the axiom, duality and oracle checks.
    Verify(Common),
    /// Evaluate a composed and an inject-capital measure side by side.
    Compare(Common),
}

pub const DEFAULT_SEED: u64 = 0x5157_7215;

/// Output text and exit code of one invocation.
pub struct Outcome {
    pub output: String,
    pub exit_code: u8,
}

fn prepare(common: &Common) -> CliResult<(RunConfig, sysrisk_core::SystemLoss, OutputFormat, u64)> {
    let cfg = RunConfig::load(&common.config)?;
    let path = common
        .scenarios
        .clone()
        .or_else(|| cfg.scenarios.clone())
        .ok_or_else(|| CliError::Parse("no scenario file (use --scenarios or `scenarios` in the config)".into()))?;
    let x = sysrisk_core::io::read_scenarios(&path).map_err(|e| match CliError::from(e) {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let format = common.format.or(cfg.format).unwrap_or(OutputFormat::Text);
    let seed = common.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    Ok((cfg, x, format, seed))
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Risk(common) => {
            let (cfg, x, format, _) = prepare(common)?;
            let r = commands::cmd_risk(&cfg, &x)?;
            Ok(Outcome { output: r.render(format)?, exit_code: EXIT_OK })
        }
        Command::Allocate { common, method } => {
            let (cfg, x, format, _) = prepare(common)?;
            let method = method.as_deref().map(str::parse::<AllocationMethod>).transpose()?;
            let r = commands::cmd_allocate(&cfg, &x, method)?;
            Ok(Outcome { output: r.render(format)?, exit_code: EXIT_OK })
        }
        Command::Verify(common) => {
            let (cfg, x, format, seed) = prepare(common)?;
            let r = commands::cmd_verify(&cfg, &x, seed)?;
            Ok(Outcome { output: r.render(format)?, exit_code: r.exit_code() })
        }
        Command::Compare(common) => {
            let (cfg, x, format, _) = prepare(common)?;
            let r = commands::cmd_compare(&cfg, &x)?;
            Ok(Outcome { output: r.render(format)?, exit_code: r.exit_code() })
        }
    }
}

//! `stockcast`: batch runs over daily index data.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid input or usage, 3 some models failed.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Ctx;
use config::RunConfig;
use error::CliResult;

#[derive(Parser)]
#[command(name = "stockcast", version, about = "Forecasting workbench for daily index data")]
struct Cli {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: `out` from the config, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Contemporaneous,
    Lagged,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and audit a price CSV.
    Ingest { prices: Option<PathBuf> },
    /// Write the derived feature table.
    Features { prices: Option<PathBuf> },
    /// Fit the configured models and evaluate Case I and Case II.
    Eval,
    /// Mood-to-close_norm causality grid.
    Granger,
    /// Train the fuzzy rule network and forecast weekly.
    Sofnn,
    /// Compare an existing report against the reference table.
    Report,
}

fn run(cli: Cli) -> CliResult<u8> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::empty(PathBuf::new()),
    };
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    if let Some(m) = cli.mode {
        let name = match m {
            ModeArg::Contemporaneous => "contemporaneous",
            ModeArg::Lagged => "lagged",
        };
        cfg.set("mode", name.to_string());
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.out_dir());
    let ctx = Ctx { cfg, out };
    let outputs = match cli.command {
        Command::Ingest { prices } => commands::ingest(&ctx, prices)?,
        Command::Features { prices } => commands::features(&ctx, prices)?,
        Command::Eval => commands::eval(&ctx)?,
        Command::Granger => commands::granger(&ctx)?,
        Command::Sofnn => commands::sofnn(&ctx)?,
        Command::Report => commands::report(&ctx)?,
    };
    outputs.write(&ctx.out)?;
    if outputs.failures.is_empty() {
        return Ok(0);
    }
    for f in &outputs.failures {
        eprintln!("stockcast: model failed: {f}");
    }
    Ok(3)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("stockcast: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `tcov`: coverage maps, optimization, sweeps and validation runs for
//! tethered and untethered UAV deployments.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "tcov", version, about = "Tethered and untethered UAV coverage over a hot-spot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML (or `.json`) run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the analytic results against simulation; exit code 1 on any mismatch.
    Validate,
    /// System coverage over a plane grid at a fixed UAV altitude.
    CoverageMap,
    /// Best UAV location (U-UAV on the axis grid, T-UAV over listed ground stations).
    Optimize,
    /// One row per value of a swept parameter.
    Sweep,
    /// User association classes over a plane grid.
    AssociationMap,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::CoverageMap => "coverage-map",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
            Command::AssociationMap => "association-map",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.display().to_string());
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    let name = cli.command.name();
    let (table, ok) = match cli.command {
        Command::Validate => {
            let v = commands::validate(&cfg)?;
            (v.table, v.all_passed)
        }
        Command::CoverageMap => (commands::coverage_map(&cfg)?, true),
        Command::Optimize => (commands::optimize(&cfg)?, true),
        Command::Sweep => (commands::sweep(&cfg)?, true),
        Command::AssociationMap => (commands::association_map(&cfg)?, true),
    };
    output::emit(name, &cfg, &table)?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: see the pass column");
            ExitCode::FAILURE
        }
        // `tcov ... | head` is not an error.
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

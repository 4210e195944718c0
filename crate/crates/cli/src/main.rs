use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{Failure, Invocation};
use config::KvConfig;

/// Massive-MIMO testbed planner and link simulator.
///
/// Exit codes: 0 ok, 1 config error, 2 constraint failure, 3 no sync peak.
#[derive(Parser, Debug)]
#[command(name = "mami-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Flat key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config entry, e.g. --set m=64. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Frame schedule, one letter per symbol (P U p D G).
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a hardware partitioning against the link and rate limits.
    Plan(Common),
    /// Run one TDD frame and write per-symbol error counts.
    Simulate(Common),
    /// BER sweep over transmit gain.
    Sweep(Common),
    /// PSS timing and CFO acquisition on a generated or recorded stream.
    Sync(Common),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, cmd): (Common, fn(Invocation<'_>, &mut dyn std::io::Write) -> commands::CmdResult) = match cli.command {
        Command::Plan(c) => (c, commands::cmd_plan),
        Command::Simulate(c) => (c, commands::cmd_simulate),
        Command::Sweep(c) => (c, commands::cmd_sweep),
        Command::Sync(c) => (c, commands::cmd_sync),
    };
    let mut config = KvConfig::load(&common.config)?;
    for kv in &common.overrides {
        config.set(kv)?;
    }
    let inv = Invocation {
        config,
        out: &common.out,
        seed: common.seed,
        schedule: common.schedule,
    };
    cmd(inv, &mut std::io::stdout().lock())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mami-bench: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

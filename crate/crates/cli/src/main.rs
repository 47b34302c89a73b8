#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Outcome;
use config::RunConfig;
use error::CliError;
use output::OutDir;

/// Largest accepted `--refine`; each level doubles the grid.
const MAX_REFINE: u32 = 8;

#[derive(Parser)]
#[command(
    name = "blowup",
    version,
    about = "Blow-up experiments for radial reaction-diffusion problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Double the grid and halve the steps this many times.
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=MAX_REFINE as i64))]
    refine: u32,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the explicit solver and write the trace and snapshots.
    Solve,
    /// Run the transformed-equation oracle.
    Oracle,
    /// Solver, oracle and every bound check, with a pass/fail summary.
    Verify,
    /// Compare the run with and without the gradient term.
    Compare,
    /// Sample the structural inequalities only.
    Conditions,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Oracle => "oracle",
            Command::Verify => "verify",
            Command::Compare => "compare",
            Command::Conditions => "conditions",
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::MissingKey("--config".into()))?;
    let cfg = RunConfig::load(path, cli.refine)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = OutDir::create(&dir, cfg.header(cli.command.name()))?;
    match cli.command {
        Command::Solve => commands::solve_cmd(&cfg, &out),
        Command::Oracle => commands::oracle_cmd(&cfg, &out),
        Command::Verify => commands::verify_cmd(&cfg, &out),
        Command::Compare => commands::compare_cmd(&cfg, &out),
        Command::Conditions => commands::conditions_cmd(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

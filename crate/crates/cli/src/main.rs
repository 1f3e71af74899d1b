//! `ddrobust` command-line interface.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddrobust::oracle::{Fault, Level};

use crate::commands::CliError;
use crate::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "ddrobust", version, about = "Dynamical-decoupling robustness simulator")]
struct Cli {
    /// Worker threads for Monte Carlo realizations.
    #[arg(long, global = true, env = "DDROBUST_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// udd | pdd | cpmg | custom
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
    /// Custom schedule: one fraction per line, ascending.
    #[arg(long)]
    fractions: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Copy, Clone, ValueEnum)]
enum FaultArg {
    None,
    FlipSign,
}

#[derive(Subcommand)]
enum Command {
    /// Signal trace s(t), q(t) of one sequence.
    Trace(RunArgs),
    /// Mean 1 - s(T) against xi with a linear fit in xi^2.
    SweepXi(RunArgs),
    /// Mean noisy traces for several pulse counts.
    SweepN(RunArgs),
    /// Ideal traces of several protocols and where each leads.
    Compare(RunArgs),
    /// Dense-matrix oracle checks.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[arg(long, value_enum, default_value = "none", hide = true)]
        fault: FaultArg,
    },
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let ov = Overrides {
        seed: args.seed,
        reps: args.reps,
        out: args.out.clone(),
        protocol: args.protocol.clone(),
        n: args.n,
        xi: args.xi,
        fractions: args.fractions.clone(),
    };
    Ok(RunConfig::load(args.config.as_deref(), &ov)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Trace(a) => commands::trace(&load(&a)?),
        Command::SweepXi(a) => commands::sweep_xi_cmd(&load(&a)?),
        Command::SweepN(a) => commands::sweep_n_cmd(&load(&a)?),
        Command::Compare(a) => commands::compare(&load(&a)?),
        Command::Verify { level, fault } => commands::verify(
            match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            },
            match fault {
                FaultArg::None => Fault::None,
                FaultArg::FlipSign => Fault::FlipPulseSign,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

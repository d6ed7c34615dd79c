//! `osbop`: batch front end for the bucket order solvers.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 budget exceeded.

mod commands;
mod error;
mod input;
mod range;
mod report;
mod reproduce;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{ExactArgs, SolveArgs, SpaceArgs, UtopiaArgs};
use crate::error::CliError;
use crate::reproduce::ReproduceArgs;

#[derive(Parser, Debug)]
#[command(name = "osbop", version, about = "Consensus bucket orders and weighted sets of bucket orders")]
struct Cli {
    /// More log output (repeat for debug level).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the stochastic local search for one or more seeds.
    Solve(SolveArgs),
    /// Enumerate every equal-weight set of b bucket orders and list all optima.
    Exact(ExactArgs),
    /// Utopian matrices and whether they split into equally weighted orders.
    Utopia(UtopiaArgs),
    /// CSV of solution-space sizes.
    Space(SpaceArgs),
    /// Re-run the benchmark grid and diff it against the published values.
    ReproduceTables(ReproduceArgs),
}

fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Solve(args) => Ok(commands::solve(args)?.render(args.out)),
        Command::Exact(args) => Ok(commands::exact(args)?.render(args.out)),
        Command::Utopia(args) => Ok(commands::utopia_cmd(args)?.render(args.out)),
        Command::Space(args) => commands::space(args),
        Command::ReproduceTables(args) => Ok(reproduce::render(&reproduce::reproduce(args)?, args.out)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli.command) {
        Ok(text) => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

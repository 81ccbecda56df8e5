use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lanefree_cli::{cmd_audit, cmd_fd, cmd_run, AuditArgs, CliError, FdArgs, Outcome, RunArgs};

/// Lane-free ring-road traffic simulator.
#[derive(Parser, Debug)]
#[command(name = "lanefree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Produce fundamental diagrams (one CSV per scenario, an SVG overlay and a manifest).
    Fd {
        /// JSON experiment configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario to run; repeatable. Defaults to every configured scenario.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the base seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate one vehicle count and optionally dump trajectories.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to the first configured scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Number of vehicles.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write trajectories.csv, sampling every K steps.
        #[arg(long, value_name = "K")]
        trajectories: Option<usize>,
    },
    /// Replay a trajectory file through the collision, boundary and speed checks.
    Audit {
        /// trajectories.csv written by `run`.
        trajectories: PathBuf,
        /// Vehicle table; defaults to vehicles.csv next to the trajectories.
        #[arg(long)]
        vehicles: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario the trajectories were recorded under (sets the road width).
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn dispatch(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Fd { config, scenarios, out, seed } => cmd_fd(&FdArgs { config, scenarios, out, seed }),
        Command::Run { config, scenario, n, out, seed, trajectories } => cmd_run(&RunArgs {
            config,
            scenario,
            n,
            out,
            seed,
            trajectories,
        }),
        Command::Audit { trajectories, vehicles, config, scenario } => cmd_audit(&AuditArgs {
            trajectories,
            vehicles,
            config,
            scenario,
        })
        .map(|(_, outcome)| outcome),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lanefree: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

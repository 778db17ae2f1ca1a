//! `topodyn` command line interface.
//!
//! Exit codes: 0 converged (or command succeeded), 1 configuration or I/O
//! error, 2 horizon reached before convergence, 3 integration failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use topodyn::dynamics::Status;
use topodyn::io::{self, OUT_DIR_ENV};
use topodyn::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_HORIZON: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "topodyn",
    about = "Opinion dynamics with k-nearest-neighbor interactions",
    long_about = "Simulate and analyze continuous-time opinion dynamics where every agent \
                  follows its k nearest peers, with a metric bounded-confidence baseline \
                  for contrast.\n\nExit codes: 0 converged/success, 1 config error, \
                  2 horizon reached, 3 integration failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run and write trajectory/event/summary artifacts
    Simulate {
        /// Run configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Override the seed of a random init
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to $TOPODYN_OUT, then ".")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a state file and print cluster and stability information
    Analyze {
        /// State file (JSON: {"k": ..., "opinions": [...]})
        #[arg(long)]
        state: PathBuf,
        /// Cluster grouping tolerance
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Equilibrium tolerance on the sup-norm of the field
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run a perturbation/addition/removal scenario and write its report
    Experiment {
        /// Scenario file (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (defaults to $TOPODYN_OUT, then ".")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a trajectory table to an SVG plot
    Plot {
        /// Trajectory table (CSV with header t,x_1,...,x_n)
        #[arg(long)]
        trajectory: PathBuf,
        /// Optional event log to mark switches (JSON lines)
        #[arg(long)]
        events: Option<PathBuf>,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::HorizonReached => EXIT_HORIZON,
    }
}

fn error_code(err: &Error) -> u8 {
    match err {
        Error::StepRejected { .. } => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let outcome = io::cmd_simulate(&config, seed, &out_dir(out))?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            Ok(status_code(outcome.status))
        }
        Command::Analyze { state, eps, tol } => {
            let doc = io::cmd_analyze(&state, eps, tol)?;
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(0)
        }
        Command::Experiment { scenario, out } => {
            let (doc, _) = io::cmd_experiment(&scenario, &out_dir(out))?;
            println!("{}", serde_json::to_string_pretty(&doc)?);
            let worst = doc
                .runs
                .iter()
                .map(|r| status_code(r.status))
                .max()
                .unwrap_or(0);
            Ok(worst)
        }
        Command::Plot { trajectory, events, out } => {
            io::cmd_plot(&trajectory, events.as_deref(), &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_code(&err))
        }
    }
}

//! Thin command-line front end: clap parsing only, all behavior in
//! [`feederflow::cli`].

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use feederflow::cli::{
    self, cmd_compare, cmd_solve, cmd_sweep, cmd_verify, parse_cases, parse_mode, parse_policy,
    CliError, CommandOutput, CompareArgs, SolveArgs, SweepArgs, VerifyArgs,
};

#[derive(Parser)]
#[command(
    name = "feederflow",
    version,
    about = "Radial feeder power flow, inverter var policies, and loss-ordering certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the power flow for a feeder file and report the operating point
    Solve {
        /// Feeder description file (TOML)
        feeder: PathBuf,
        /// Reactive policy at inverter buses: none | heuristic
        #[arg(long, default_value = "none")]
        policy: String,
        /// Convergence tolerance on the per-iteration voltage change (pu)
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Write a machine-readable JSON document to this path
        #[arg(long)]
        output: Option<PathBuf>,
        /// Re-emit the parsed feeder to this path (round-trips exactly)
        #[arg(long)]
        echo: Option<PathBuf>,
    },
    /// Compare losses under no action and under the load-tracking policy
    Compare {
        /// Feeder description file (TOML)
        feeder: PathBuf,
        /// Convergence tolerance on the per-iteration voltage change (pu)
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Write a machine-readable JSON document to this path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Certify the loss and voltage orderings on seeded random cases
    Verify {
        /// `all` or a comma-separated list of case tokens
        #[arg(long, default_value = "all")]
        cases: String,
        /// Random trials per (case, mode)
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Master seed; every trial derives its own reported seed from it
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Loss evaluation: closed | exact | both
        #[arg(long, default_value = "both")]
        mode: String,
        /// Write a machine-readable JSON document to this path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Brute-force the loss-minimizing constant setpoints on a uniform grid
    Sweep {
        /// Feeder description file (TOML)
        feeder: PathBuf,
        /// Grid points per controllable bus (endpoints 0 and q_max included)
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Write a machine-readable JSON document to this path
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Solve {
            feeder,
            policy,
            tolerance,
            output,
            echo,
        } => cmd_solve(&SolveArgs {
            feeder,
            policy: parse_policy(&policy)?,
            tolerance,
            output,
            echo,
        }),
        Command::Compare {
            feeder,
            tolerance,
            output,
        } => cmd_compare(&CompareArgs {
            feeder,
            tolerance,
            output,
        }),
        Command::Verify {
            cases,
            trials,
            seed,
            mode,
            output,
        } => cmd_verify(&VerifyArgs {
            cases: parse_cases(&cases)?,
            trials,
            seed,
            mode: parse_mode(&mode)?,
            output,
        }),
        Command::Sweep {
            feeder,
            grid,
            output,
        } => cmd_sweep(&SweepArgs {
            feeder,
            grid,
            output,
        }),
    }
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // `print` routes help/version to stdout and errors to stderr.
            // Bare invocation (missing subcommand) still shows the help text
            // but is a usage error, same as any other bad invocation.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => cli::EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(output) => {
            print!("{}", output.report);
            output.exit_code
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.exit_code
        }
    }
}

fn main() {
    std::process::exit(run());
}

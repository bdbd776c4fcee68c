//! `fraclog` command line: penalized solves, ε-sweeps, limiting energies,
//! inequality verification and dump analysis.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use commands::{Common, Outcome};

#[derive(Parser)]
#[command(name = "fraclog", version, about = "Spectral laboratory for the fractional logarithmic Schrödinger equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Experiment directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// First seed of the verification corpus.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject unknown config keys.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the penalized problem once.
    Solve(Shared),
    /// Run the ε-sweep from the `sweep` section.
    Sweep(Shared),
    /// Tabulate the limiting energy for a list of λ.
    Limit {
        #[command(flatten)]
        shared: Shared,
        /// Comma-separated λ values, each > −1.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        lambda: Vec<f64>,
        /// Fractional order; defaults to `order.s`.
        #[arg(long)]
        s: Option<f64>,
    },
    /// Run the inequality corpus from the `verify` section.
    Verify(Shared),
    /// Maximum, decay fit and recovery check on an existing dump.
    Analyze {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        dump: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (shared, name) = match &cli.command {
        Command::Solve(s) => (s, "solve"),
        Command::Sweep(s) => (s, "sweep"),
        Command::Limit { shared, .. } => (shared, "limit"),
        Command::Verify(s) => (s, "verify"),
        Command::Analyze { shared, .. } => (shared, "analyze"),
    };
    let common = Common {
        config: commands::load(&shared.config, shared.strict)?,
        out: shared.out.clone(),
        seed: shared.seed,
        command: name,
    };
    match &cli.command {
        Command::Solve(_) => commands::solve(&common),
        Command::Sweep(_) => commands::sweep(&common),
        Command::Limit { lambda, s, .. } => commands::limit(&common, lambda, *s),
        Command::Verify(_) => commands::verify(&common),
        Command::Analyze { dump, .. } => commands::analyze(&common, dump),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NumericalFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            if config::is_config_error(&e) {
                return ExitCode::from(1);
            }
            match e.downcast_ref::<fraclog::Error>() {
                Some(fraclog::Error::SolverAbort { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

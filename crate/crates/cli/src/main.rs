use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smgame_cli::{run_scenario, CliError, Overrides};
use smgame_core::catalog::{CATALOG, DEFAULT_EPSILON};

#[derive(Parser)]
#[command(name = "smgame", version, about = "Smooth games and smooth markets from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis requested by a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory, overriding the scenario's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the discrete integrator and the boundedness probe.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in games and generators.
    ListGames,
}

fn list_games() {
    println!("built-in games (kind = \"builtin\", epsilon defaults to {DEFAULT_EPSILON}):");
    for (key, description) in CATALOG {
        println!("  {key:<20} {description}");
    }
    println!("generators:");
    println!("  {:<20} dims, concavity, seed: random zero-sum polymatrix market", "polymatrix");
    println!("  {:<20} dims, concavity, couplings: bilinear market with goods valuations", "near_sm");
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListGames => {
            list_games();
            ExitCode::SUCCESS
        }
        Command::Run { scenario, out, seed } => match run_scenario(&scenario, &Overrides { output_dir: out, seed }) {
            Ok(summary) => match &summary.divergence {
                Some(err) => fail(err),
                None => {
                    println!("{}", summary.output_dir.display());
                    ExitCode::SUCCESS
                }
            },
            Err(err) => fail(&err),
        },
    }
}

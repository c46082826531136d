use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bilevel_harness::{compare_runs, load_config, run_experiment, HarnessError};

#[derive(Parser)]
#[command(
    name = "bilevel",
    about = "Run and compare bilevel optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of one experiment config, writing a CSV per seed.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run two configs on the same problem and report aligned final metrics.
    Compare {
        #[arg(long = "config-a")]
        config_a: PathBuf,
        #[arg(long = "config-b")]
        config_b: PathBuf,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) | HarnessError::Mismatch(_) => EXIT_CONFIG,
        _ if err.is_divergence() => EXIT_DIVERGED,
        _ => 1,
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let runs = run_experiment(&config)?;
            for run in &runs {
                println!(
                    "seed {}: wrote {} ({} rows)",
                    run.seed,
                    run.path.display(),
                    run.rows.len()
                );
            }
            Ok(())
        }
        Command::Compare { config_a, config_b } => {
            let a = load_config(&config_a)?;
            let b = load_config(&config_b)?;
            let report = compare_runs(&a, &b)?;
            print!("{report}");
            Ok(())
        }
        Command::Validate { config } => {
            let parsed = load_config(&config)?;
            println!(
                "ok: {} for {} outer steps, seeds {:?}, output {}",
                parsed.algorithm.name(),
                parsed.k_max,
                parsed.seeds,
                parsed.output.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

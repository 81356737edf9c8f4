use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osga_bench::config::{apply_overrides, load_config, Overrides};
use osga_bench::profile::{default_tau_grid, performance_profile};
use osga_bench::run::{profile_from_summary, render_profile, run_experiment};
use osga_bench::{BenchError, Result};

#[derive(Parser)]
#[command(name = "osga-bench", version, about = "Composite-objective solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV bundle.
    Run {
        /// Path to a flat key-value config file.
        config: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the iteration budget.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Override the time budget in seconds.
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Override the solver list (comma separated).
        #[arg(long)]
        solvers: Option<String>,
    },
    /// Rebuild a performance profile from an existing summary file.
    Profile {
        /// Path to a summary.csv written by `run`.
        summary: PathBuf,
    },
    /// Run the built-in invariant checks.
    Check,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, out_dir, max_iters, max_seconds, solvers } => {
            let mut experiment = load_config(&config).map_err(|e| match e {
                BenchError::Io { path, source } => {
                    BenchError::config(format!("cannot read config {}: {source}", path.display()))
                }
                other => other,
            })?;
            let overrides = Overrides { seed, out_dir, max_iters, max_seconds, solvers };
            apply_overrides(&mut experiment, &overrides)?;
            let artifacts = run_experiment(&experiment)?;
            println!("wrote {} trace files to {}", artifacts.trace_paths.len(), artifacts.out_dir.display());
            println!("summary: {}", artifacts.summary_path.display());
            println!("profile: {}", artifacts.profile_path.display());
            if artifacts.any_failure {
                eprintln!("some solver runs failed; see the summary status column");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile { summary } => {
            let table = profile_from_summary(&summary)?;
            let grid = default_tau_grid(&table)?;
            let curves = performance_profile(&table, &grid)?;
            let out = summary
                .parent()
                .map(|d| d.join("profile.csv"))
                .unwrap_or_else(|| PathBuf::from("profile.csv"));
            std::fs::write(&out, render_profile(&curves))
                .map_err(|e| BenchError::io(out.clone(), e))?;
            println!("profile: {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            if osga_bench::checks::run_checks() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

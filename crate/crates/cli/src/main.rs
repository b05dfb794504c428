use std::path::PathBuf;
use std::process::ExitCode;

use active_lines::summary::DEFAULT_THRESHOLD;
use active_lines_cli::{batch, check, default_out_dir, run, EXIT_OK};
use clap::{Parser, Subcommand};

/// Active estimation of 3D lines from a moving camera.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trajectory.csv, world.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_os_t = default_out_dir())]
        out: PathBuf,
        /// Convergence threshold on the Plücker error.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Simulate a seed range and write per-seed summaries plus aggregate.json.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Half-open `A..B` or inclusive `A..=B`.
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value_os_t = default_out_dir())]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Run the numerical self-check oracles.
    Check {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Flip the sign of the first η rate before checking.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIM_LOG_LEVEL", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, threshold } => run(&config, &out, threshold),
        Command::Batch {
            config,
            seeds,
            out,
            threshold,
        } => batch(&config, &seeds, &out, threshold),
        Command::Check {
            samples,
            seed,
            inject_fault,
        } => check(samples, seed, inject_fault),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(f) => {
            log::error!("{:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fepkit_core::harness::{execute, prepare, Kind, Overrides};

/// Runs one experiment described by a JSON config file.
#[derive(Parser, Debug)]
#[command(name = "fepkit", version)]
struct Cli {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 3 when the run's pass check fails.
    #[arg(long)]
    assert: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        workers: cli.workers,
    };
    let prepared = std::fs::read_to_string(&cli.config)
        .map_err(|e| format!("cannot read {}: {e}", cli.config.display()))
        .and_then(|text| prepare(&text, Some(cli.kind), &overrides).map_err(|e| e.to_string()));
    let prepared = match prepared {
        Ok(p) => p,
        Err(e) => {
            eprintln!("fepkit: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&prepared) {
        Ok(out) => {
            println!(
                "{} {} -> {}",
                out.task.name(),
                if out.pass { "PASS" } else { "FAIL" },
                out.out_dir.display()
            );
            if cli.assert && !out.pass {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("fepkit: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levyest_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "levyest", version, about = "Lévy density estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate replicate 0 of every grid cell
    Simulate(Common),
    /// Estimate λ and the Lévy density from a sample file
    Estimate(Common),
    /// Convergence study: risk.csv, slopes.csv, bounds.csv
    Bench(Common),
    /// Bound checks: bounds.csv
    CheckBounds(Common),
    /// Small-time diagnostics: diagnostics.csv
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Overrides the master seed in the config
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N", env = "LEVYEST_WORKERS")]
    workers: Option<usize>,
    /// Also write the simulated samples (bench only)
    #[arg(long)]
    dump_samples: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::Bench(c) => (Command::Bench, c),
        Cmd::CheckBounds(c) => (Command::CheckBounds, c),
        Cmd::Diagnose(c) => (Command::Diagnose, c),
    };
    let rc = RunConfig {
        command,
        config_path: c.config,
        out_dir: c.out,
        seed: c.seed,
        workers: c.workers,
        dump_samples: c.dump_samples,
    };
    match run(&rc) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("levyest {}: {e:#}", command.as_str());
            ExitCode::from(1)
        }
    }
}

//! `svm`: validate configs, estimate densities, price, and self-check.
//!
//! Exit codes: 0 success, 1 self-check failure, 2 validation failure,
//! 3 I/O or parse failure, 4 runtime guard or failure budget exceeded.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Overrides, SelfcheckOptions};

#[derive(Parser)]
#[command(name = "svm", version, about = "Malliavin-weight densities and option prices under stochastic volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed (overrides the configured one).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration against the model assumptions.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Malliavin and KDE densities of the averaged variance.
    Density(RunFlags),
    /// Density-quadrature, mixing and plain Monte Carlo prices.
    Price(RunFlags),
    /// Run the acceptance battery.
    Selfcheck {
        #[command(flatten)]
        common: CommonFlags,
        /// Run at desk scale instead of the reduced one.
        #[arg(long)]
        desk: bool,
        /// Run only these check ids (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Swap Φ for a corrupted implementation (fault injection).
        #[arg(long, hide = true)]
        inject_cdf_fault: bool,
    },
}

fn overrides(out: Option<PathBuf>, c: CommonFlags) -> Overrides {
    Overrides { out, threads: c.threads, seed: c.seed }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Density(f) => commands::density(&f.config, &overrides(f.out, f.common)),
        Command::Price(f) => commands::price(&f.config, &overrides(f.out, f.common)),
        Command::Selfcheck { common, desk, only, inject_cdf_fault } => {
            commands::selfcheck(&overrides(None, common), &SelfcheckOptions { desk, only, inject_cdf_fault })
        }
    };
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.exit_code();
            // validation codes go to stdout so they can be parsed like the VALID line
            let lines = f.report();
            for l in lines {
                if code == 2 {
                    println!("{l}");
                } else {
                    eprintln!("{l}");
                }
            }
            ExitCode::from(code)
        }
    }
}

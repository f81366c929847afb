//! `wildfan`: verify, compare, and search fan subsolutions from the command line.
//!
//! Exit codes: 0 verification passed, 1 verification failed, 2 input or usage
//! error, 3 undecided within the precision cap.

mod commands;
mod render;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wildfan_core::exactnum::{set_precision_cap, DEFAULT_PRECISION_CAP};

#[derive(Debug, Parser)]
#[command(name = "wildfan", version)]
#[command(about = "Exact verification and search of fan subsolutions for 2D barotropic Euler")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Largest interval precision, in bits, before a sign is reported undecided.
    #[arg(long, global = true, env = "WILDFAN_PRECISION_CAP", default_value_t = DEFAULT_PRECISION_CAP)]
    precision_cap: u32,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify the built-in counterexample fan and its dominance over the shock.
    VerifyExample {
        /// Also write the fan as a fan file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a Riemann problem and report its dissipation profile.
    Riemann { file: PathBuf },
    /// Verify a fan file and compare it with the self-similar solution.
    VerifyFan { file: PathBuf },
    /// Search for a dominating fan from Riemann data and certify it exactly.
    Search {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 20_000)]
        max_iters: u64,
        /// Denominator used when rounding the free values.
        #[arg(long, default_value_t = 1_000_000)]
        denominator_cap: u64,
        /// Let the tangential momenta vary even for purely normal data.
        #[arg(long)]
        general: bool,
        /// Write the certified fan here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build two-point oscillations and check their diagnostics.
    Oscillate { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    set_precision_cap(cli.precision_cap);
    let result = match cli.command {
        Command::VerifyExample { out } => commands::verify_example(out.as_deref()),
        Command::Riemann { file } => commands::riemann(&file),
        Command::VerifyFan { file } => commands::verify_fan(&file),
        Command::Search { file, restarts, max_iters, denominator_cap, general, out } => {
            let cfg = wildfan_core::search::SearchConfig {
                restarts,
                max_iters,
                rounding_denominator_cap: denominator_cap,
                rng_seed: cli.seed,
                general_ansatz: general,
                ..Default::default()
            };
            commands::search(&file, &cfg, out.as_deref())
        }
        Command::Oscillate { file } => commands::oscillate(&file),
    };
    match result {
        Ok(out) => {
            print!("{}", out.render(cli.format));
            ExitCode::from(out.outcome.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

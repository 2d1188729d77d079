//! Command-line front end for the `aoiq` library: validate network files,
//! compute closed-form ages, run the simulator, sweep a parameter grid, and
//! write reference datasets.
//!
//! Exit codes: 0 on success, 1 on validation or runtime failure, 2 on usage
//! errors (bad flags, malformed grids).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod fmtnum;
mod grid;

#[derive(Parser)]
#[command(
    name = "aoiq",
    version,
    about = "Age of information in networks of exponential queues"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file: traffic solution, stability, overtake-freedom
    Validate {
        /// Network description file
        #[arg(long)]
        spec: PathBuf,
    },
    /// Closed-form per-class ages, CSV on stdout
    Analyze {
        /// Network description file
        #[arg(long)]
        spec: PathBuf,
    },
    /// Simulate the network and compare against the closed forms, CSV on stdout
    Simulate {
        /// Network description file
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
        /// Write one `class,gen_time,exit_time` line per delivery to stderr
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate ages along a one-parameter grid, CSV on stdout
    Sweep {
        /// Network description file
        #[arg(long)]
        spec: PathBuf,
        /// Grid `param=start:stop:step`; param is `lambda.<class>` or `mu.<node>`
        #[arg(long)]
        grid: String,
        /// Also simulate every stable grid point
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Write a reference dataset and its summary file into a directory
    Reproduce {
        /// Which dataset to write
        figure: Figure,
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Args)]
struct SimFlags {
    /// Master seed for all random streams
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Simulated time per replication
    #[arg(long, default_value_t = 1e6)]
    horizon: f64,
    /// Independent replications
    #[arg(long, default_value_t = 10)]
    replications: u32,
    /// Fraction of the horizon discarded as warm-up
    #[arg(long, default_value_t = 0.1)]
    warmup_frac: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    /// Tandem-path age versus arrival rate for path lengths 1, 2, 5, 10
    Fig3,
    /// First class age over the two-class merge rate grid
    Fig5a,
    /// Both class ages over the two-class merge rate grid
    Fig5b,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

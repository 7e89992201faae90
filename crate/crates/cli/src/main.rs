//! `geolin` command-line front end.
//!
//! Exit codes: 0 success, 1 tolerance or shape check failed, 2 usage, I/O or
//! parse failure. On exit 2 nothing is written to the output path.

#![allow(clippy::needless_range_loop)]

mod bench;
mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geolin::findiff::{Normalization, Scheme};

#[derive(Parser, Debug)]
#[command(
    name = "geolin",
    version,
    about = "Linearized moving-base dynamics: validation, δ studies, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare analytic and finite-difference derivatives over random trials.
    Validate(ValidateArgs),
    /// Sweep the finite-difference step.
    Study(StudyArgs),
    /// Time the dynamics kernels.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model document to load.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Use the built-in nine-joint test system.
    #[arg(long)]
    pub test_system: bool,
}

#[derive(Args, Debug, Clone)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Forward)]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = NormArg::Block)]
    pub normalization: NormArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Forward,
    Central,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Forward => Scheme::Forward,
            SchemeArg::Central => Scheme::Central,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Block,
    Entrywise,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Block => Normalization::Block,
            NormArg::Entrywise => Normalization::Entrywise,
        }
    }
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Bound on every aggregate e_max.
    #[arg(long, default_value_t = 1e-2)]
    pub max_tol: f64,
    /// Bound on every aggregate e_avg.
    #[arg(long, default_value_t = 1e-3)]
    pub avg_tol: f64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub trials: TrialArgs,
    /// Strictly decreasing list of steps.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 1..,
        default_value = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8,1e-9,1e-10,1e-11,1e-12"
    )]
    pub deltas: Vec<f64>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Study(a) => commands::study(a),
        Command::Bench(a) => bench::bench(a),
    };
    match result {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

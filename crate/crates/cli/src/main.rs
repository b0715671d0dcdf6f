//! Command-line front end: configure, run, analyze and export.
//!
//! Exit codes: 0 success, 1 validation error, 2 one or more trials hit the
//! interaction cap, 3 closed form and linear solver disagree.

mod analyze;
mod manifest;
mod output;
mod reproduce;
mod simulate;

use std::collections::hash_map::RandomState;
use std::fmt;
use std::hash::{BuildHasher, Hasher};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_CAPPED: u8 = 2;
pub const EXIT_ORACLE_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "d3sync",
    version,
    about = "Simulate and analyze discrete dithered desynchronization schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials to absorption and write summary files
    Simulate(SimulateArgs),
    /// Tabulate expected absorption times, optionally cross-checked by the
    /// chain solver
    Analyze(AnalyzeArgs),
    /// Run a canned experiment preset and write tidy CSV
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub enum InitArg {
    Random,
    WorstCase,
    File(PathBuf),
}

impl InitArg {
    pub fn canonical(&self) -> String {
        match self {
            InitArg::Random => "random".into(),
            InitArg::WorstCase => "worst-case".into(),
            InitArg::File(path) => format!("file:{}", path.display()),
        }
    }
}

fn parse_init(value: &str) -> Result<InitArg, String> {
    match value {
        "random" => Ok(InitArg::Random),
        "worst-case" => Ok(InitArg::WorstCase),
        other => match other.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(InitArg::File(PathBuf::from(path))),
            _ => Err("expected one of: random, worst-case, file:PATH".into()),
        },
    }
}

fn parse_node_range(value: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = value
        .split_once("..")
        .ok_or_else(|| "expected an inclusive range like 3..25".to_string())?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad range start {lo:?}"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad range end {hi:?}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Number of nodes sharing the frame
    #[arg(long)]
    pub nodes: usize,
    /// Frame length in slots
    #[arg(long)]
    pub slots: u32,
    /// Update inertia, strictly between 0 and 1
    #[arg(long)]
    pub alpha: f64,
    /// Master seed; generated from entropy and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials to run (per outlier/edge placement in worst-case mode)
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Initial state: random | worst-case | file:PATH
    #[arg(long, default_value = "random", value_parser = parse_init)]
    pub init: InitArg,
    /// Per-trial interaction cap; defaults to ten times the expected-time
    /// bound
    #[arg(long)]
    pub max_interactions: Option<u64>,
    /// Also write per-event trajectories to trajectories.csv
    #[arg(long)]
    pub trajectory: bool,
    /// Summary format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output directory
    #[arg(long, default_value = "d3sync-out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Inclusive node range, e.g. 3..25
    #[arg(long, value_parser = parse_node_range)]
    pub nodes_range: (usize, usize),
    /// Comma-separated alpha values
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha_list: Vec<f64>,
    /// Cross-check the closed form against the dense chain solver
    #[arg(long)]
    pub solve: bool,
    /// Add the global expected-time bound column (needs --slots)
    #[arg(long)]
    pub bound: bool,
    /// Frame length used by --bound
    #[arg(long)]
    pub slots: Option<u32>,
    /// Table format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output directory
    #[arg(long, default_value = "d3sync-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
}

impl Figure {
    pub fn canonical(self) -> &'static str {
        match self {
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig5a => "fig5a",
            Figure::Fig5b => "fig5b",
        }
    }
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// Which preset to run
    #[arg(value_enum)]
    pub figure: Figure,
    /// Master seed; generated from entropy and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the preset trial count (smoke tests)
    #[arg(long)]
    pub trials: Option<u64>,
    /// Override the preset alpha (fig4a, fig4b, fig5a)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "d3sync-out")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Core(d3sync_core::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<d3sync_core::Error> for CliError {
    fn from(e: d3sync_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

/// Use the given seed, or draw one from OS entropy and print it so the run
/// can still be reproduced.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let drawn = RandomState::new().build_hasher().finish();
        println!("seed: {drawn}");
        drawn
    })
}

fn configure_threads() {
    if let Ok(threads) = std::env::var("D3SYNC_THREADS") {
        if let Ok(count) = threads.parse::<usize>() {
            if count > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(count)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Reproduce(args) => reproduce::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

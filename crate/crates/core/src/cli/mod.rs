//! `dscl` command-line surface.
//!
//! Exit codes: 0 success, 2 usage, 3 schema or config, 4 IO.

mod score;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;
use crate::reward::SchemeId;
use crate::sim::{run_experiment, SimConfig};
use crate::stats::{write_scatter_csv, GroupKey, StatsTracker};

pub use score::{cmd_score, ScoreInput, ScoreOutput, TruthRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
    #[error("SCHEMA_ERROR: {0}")]
    Schema(String),
    #[error("UNMATCHED_IDS: ids present in predictions but not in truth: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),
    #[error("EMPTY_HISTORY: the history file holds no rollout groups")]
    EmptyHistory,
    #[error("IO_ERROR: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            _ => EXIT_DATA,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(m) => CliError::Io(m),
            Error::Config(m) | Error::Range(m) => CliError::Config(m),
            Error::EmptyHistory => CliError::EmptyHistory,
            other @ (Error::Schema(_) | Error::DuplicateEpoch { .. } | Error::EpochOutOfOrder { .. }) => {
                CliError::Schema(other.to_string())
            }
        }
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

#[derive(Debug, Parser)]
#[command(name = "dscl", version, about = "Tool-call rewards, dynamic sampling and curriculum simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predictions against ground truth, one JSON line per id.
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "base")]
        scheme: SchemeId,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulated training experiment and write its run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Export the mean/variance scatter table from a stats history.
    Analyze {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// num-tools, num-params or num-turns
        #[arg(long)]
        group_by: Option<GroupKey>,
    },
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| io_err(config_path, e))?;
    let cfg = SimConfig::from_toml_str(&text)?;
    let history = run_experiment(&cfg)?;
    history.write_dir(out_dir)?;
    Ok(())
}

pub fn cmd_analyze(history_path: &Path, out_path: &Path, group_by: Option<GroupKey>) -> Result<(), CliError> {
    let tracker = StatsTracker::read_history(open(history_path)?)?;
    let rows = tracker.export_scatter(None, group_by)?;
    let mut w = create(out_path)?;
    write_scatter_csv(&rows, &mut w)?;
    w.flush().map_err(|e| io_err(out_path, e))?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score {
            predictions,
            truth,
            scheme,
            out,
        } => cmd_score(&predictions, &truth, scheme, &out),
        Command::Simulate { config, out_dir } => cmd_simulate(&config, &out_dir),
        Command::Analyze { history, out, group_by } => cmd_analyze(&history, &out, group_by),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Scenario runner for the vector-borne epidemic / predator-release model:
//! config loading, the `simulate`, `analyze`, `optimize` and `compare`
//! commands, and their CSV and JSON outputs.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{analyze, compare, optimize, simulate, Comparison, Outcome, RunMetrics, RunSummary};
pub use config::{ModelForm, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sirsilv", version, about = "Epidemic / predator-prey model: simulation, analysis and optimal predator release")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON or a previous summary.json; defaults to the packaged reference scenario
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dot-path override, e.g. `cost.c=0` or `horizon=30`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the uncontrolled model and write timeseries.csv
    Simulate(Common),
    /// Reproduction numbers, equilibria and level-set bounds
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Level of the predator-prey first integral (repeatable)
        #[arg(long, allow_negative_numbers = true)]
        k0: Vec<f64>,
    },
    /// Solve the predator-release problem by forward-backward sweeps
    Optimize(Common),
    /// Run two scenarios side by side and write compare.json
    Compare {
        /// Exactly two scenario files
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

const DEFAULT_OUT: &str = "sirsilv-out";

fn load(path: Option<&PathBuf>, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    match path {
        Some(p) => config::load(p, overrides),
        None => config::parse(config::TABLE1_JSON, overrides),
    }
}

fn out_dir(flag: Option<&PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    flag.cloned().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs a parsed command line and returns the output directory written.
pub fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load(c.config.as_ref(), &c.overrides)?;
            let dir = out_dir(c.out.as_ref(), &cfg);
            simulate(&cfg)?.write(&dir)?;
            Ok(dir)
        }
        Command::Optimize(c) => {
            let cfg = load(c.config.as_ref(), &c.overrides)?;
            let dir = out_dir(c.out.as_ref(), &cfg);
            optimize(&cfg)?.write(&dir)?;
            Ok(dir)
        }
        Command::Analyze { common: c, k0 } => {
            let cfg = load(c.config.as_ref(), &c.overrides)?;
            let dir = out_dir(c.out.as_ref(), &cfg);
            analyze(&cfg, &k0)?.write(&dir)?;
            Ok(dir)
        }
        Command::Compare { config, out, overrides } => {
            let [a, b] = config.as_slice() else {
                return Err(CliError::Config(format!("compare needs exactly two --config files, got {}", config.len())));
            };
            let (ca, cb) = (config::load(a, &overrides)?, config::load(b, &overrides)?);
            let dir = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let cmp = compare(&ca, &cb)?;
            output::write_json(&dir, "compare.json", &cmp)?;
            Ok(dir)
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("sirsilv: {e}");
            e.exit_code()
        }
    }
}

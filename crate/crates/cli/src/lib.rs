//! Command-line front end for the link simulator.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{parse_config, parse_config_str, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("simulation failed: {0}")]
    Runtime(#[from] linksim::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(linksim::Error::Config { .. } | linksim::Error::Unreachable { .. }) => 2,
            CliError::Io(_) | CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "linksim", version, about = "Monte Carlo link simulator for non-pilot interference")]
pub struct Cli {
    /// JSON scenario file; omitted keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving CSV and JSON outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Override one config key, e.g. `--set harq.max_retx=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed (same as `--set master_seed=N`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Subframes per sweep point (same as `--set subframes_per_point=N`).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (strategy, operating point) of the scenario and write sweep.csv.
    Sweep,
    /// Tabulate unbounded vs capped retransmission latency.
    LatencyTable {
        /// Comma-separated block error rates in [0, 1).
        #[arg(long, value_delimiter = ',', default_values_t = commands::DEFAULT_BLERS)]
        bler: Vec<f64>,
    },
    /// Write the resource-grid layout and per-strategy interference maps.
    GridDump,
    /// Report calibrated interference powers and equal-density budgets.
    Calibrate {
        /// Power per targeted subcarrier for the equal-density budgets (defaults to the RSRP).
        #[arg(long, value_name = "DBM")]
        tone_power_dbm: Option<f64>,
    },
}

impl Cli {
    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Sweep => "sweep",
            Command::LatencyTable { .. } => "latency-table",
            Command::GridDump => "grid-dump",
            Command::Calibrate { .. } => "calibrate",
        }
    }

    /// Loads the configuration with `--seed` and `--trials` applied last.
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("master_seed={seed}"));
        }
        if let Some(n) = self.trials {
            overrides.push(format!("subframes_per_point={n}"));
        }
        parse_config(self.config.as_deref(), &overrides)
    }
}

/// Runs a parsed command; returns the report printed to stdout.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let cfg = cli.load_config()?;
    let name = cli.command_name();
    match &cli.command {
        Command::Sweep => commands::sweep(&cfg, &cli.out, name),
        Command::LatencyTable { bler } => commands::latency_table(&cfg, bler, &cli.out, name),
        Command::GridDump => commands::grid_dump(&cfg, &cli.out, name),
        Command::Calibrate { tone_power_dbm } => commands::calibrate(&cfg, *tone_power_dbm, &cli.out, name),
    }
}

/// Parses `args`, runs, prints and returns the process exit code.
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
    match execute(&cli) {
        Ok(report) => {
            println!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `lipad`: train and apply Lipschitz anomaly critics, run the experiment
//! drivers and the transport oracle checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<lipad::Error> for CliError {
    fn from(e: lipad::Error) -> Self {
        use lipad::Error as E;
        match e {
            E::Config(_) => CliError::Config(e.to_string()),
            E::Numeric(_) => CliError::Numeric(e.to_string()),
            E::Dimension { .. } | E::Contract(_) | E::Data(_) | E::Io { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(name = "lipad", version, about = "Lipschitz anomaly detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one critic; writes model.lipadnet, trace.csv, train.csv and summary.json.
    Train {
        config: PathBuf,
        /// `--key value` overrides of top-level config keys.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Anomaly score (negated critic value) for every row of a CSV.
    Score {
        model: PathBuf,
        data: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment driver; writes report.csv and summary.csv.
    Experiment {
        kind: ExperimentKind,
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Exact transport checks on point sets read from CSV files.
    Oracle {
        #[command(subcommand)]
        check: OracleCheck,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentKind {
    Moons,
    BlackImage,
    Contamination,
    Tabular,
}

#[derive(Subcommand)]
enum OracleCheck {
    /// Wasserstein-1 distance between two uniform point sets.
    W1 { p: PathBuf, q: PathBuf },
    /// Primal cost, dual objective and their gap.
    Duality { p: PathBuf, q: PathBuf },
    /// Critic shift under contamination against its transport bound.
    Prop2 {
        nominal: PathBuf,
        anomalies: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
    },
    /// `|W(Pn, Pa) − W(Pn, P̂a)| ≤ W(Pa, P̂a)`.
    Stability {
        nominal: PathBuf,
        anomalies: PathBuf,
        estimate: PathBuf,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LIPAD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!("LIPAD_THREADS={raw} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Train { config, overrides } => {
            commands::train(&config, &config::parse_overrides(&overrides)?)
        }
        Command::Score { model, data, out } => commands::score(&model, &data, out.as_deref()),
        Command::Experiment {
            kind,
            config,
            overrides,
        } => commands::experiment(kind, &config, &config::parse_overrides(&overrides)?),
        Command::Oracle { check } => commands::oracle(check),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lipad: {e}");
            ExitCode::from(e.code())
        }
    }
}

//! quantlearn: dataset generation, semantics verification, experiment
//! execution, statistical analysis, and accuracy-curve plotting.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "quantlearn",
    version,
    about = "Quantifier learnability lab: verify semantics, generate datasets, run trials, analyze accuracies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file with flat dotted keys (net.hidden_width, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set train.total_steps=501.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Preset scale: paper (3 runs × 30 trials, full data) or desk
    /// (1 run × 5 trials, one-tenth data).
    #[arg(long)]
    profile: Option<String>,
    /// Output directory (overrides out.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively check conservativity, duality, and symmetry for all
    /// ten quantifiers.
    Verify {
        /// Model size (slot count including padding) to enumerate.
        #[arg(long, default_value_t = 20)]
        max_total: u8,
    },
    /// Generate dataset files per condition plus a manifest.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run seeded trials and write records.csv; completed trial shards on
    /// disk are reused.
    Experiment {
        #[command(flatten)]
        config: ConfigArgs,
        /// Worker pool size for trials (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Paired t-tests between two quantifiers at every recorded step.
    Analyze {
        /// records.csv produced by the experiment command.
        #[arg(long)]
        records: PathBuf,
        /// Quantifier pair as qa:qb, e.g. all_ab:only_ab.
        #[arg(long)]
        pair: String,
        /// Number of hypotheses for the Bonferroni correction (default:
        /// conditions in the records × recorded steps).
        #[arg(long)]
        m: Option<usize>,
        /// Family-wise significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha0: f64,
        /// Output directory (default: alongside the records file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median accuracy curves for one (condition, run) as SVG plus CSV.
    Plot {
        /// records.csv produced by the experiment command.
        #[arg(long)]
        records: PathBuf,
        /// Condition letter a..e.
        #[arg(long)]
        condition: String,
        /// Run index (1-based).
        #[arg(long)]
        run: u32,
        /// Output directory (default: alongside the records file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Errors carrying the exit-code classification: 1 usage/config,
/// 2 verification failure, 3 runtime/data.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Verification(m) | CliError::Runtime(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<quantlearn::experiment::ExperimentError> for CliError {
    fn from(e: quantlearn::experiment::ExperimentError) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<quantlearn::data::DataError> for CliError {
    fn from(e: quantlearn::data::DataError) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<quantlearn::stats::StatsError> for CliError {
    fn from(e: quantlearn::stats::StatsError) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Verify { max_total } => commands::verify(max_total),
        Command::Gen { config } => {
            let cfg = config::resolve(
                config.profile.as_deref(),
                config.config.as_deref(),
                &config.sets,
                config.out.as_deref(),
            )?;
            commands::gen(&cfg)
        }
        Command::Experiment { config, jobs } => {
            let cfg = config::resolve(
                config.profile.as_deref(),
                config.config.as_deref(),
                &config.sets,
                config.out.as_deref(),
            )?;
            commands::experiment(&cfg, jobs)
        }
        Command::Analyze { records, pair, m, alpha0, out } => {
            commands::analyze(&records, &pair, m, alpha0, out.as_deref())
        }
        Command::Plot { records, condition, run, out } => {
            commands::plot(&records, &condition, run, out.as_deref())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

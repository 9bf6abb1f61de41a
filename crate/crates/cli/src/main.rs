//! Command-line pipelines: ingest, stats, train, predict, crossval,
//! density, report. Every run is reproducible: all randomness flows from
//! an explicit seed and a manifest is written beside each output.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs. Exit code 1.
    Validation(String),
    /// Failures while executing a validated run. Exit code 2.
    Runtime(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "incidentmine",
    version,
    about = "Categorical incident mining: ingestion, classifiers, evaluation, density grids"
)]
struct Cli {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ClassifierArgs {
    /// One of: nb, tree, forest, ibk-linear, ibk-ball, kstar, mlp, ovr.
    #[arg(long)]
    classifier: Option<String>,
    /// Naive Bayes smoothing pseudo-count.
    #[arg(long)]
    alpha: Option<f64>,
    /// Decision tree / forest leaf size stop.
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Number of forest trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Attributes sampled per forest split.
    #[arg(long)]
    mtry: Option<usize>,
    /// Train each forest tree on the full dataset instead of a bootstrap
    /// sample.
    #[arg(long)]
    no_bootstrap: bool,
    /// Neighbor count for the ibk families.
    #[arg(long)]
    k_neighbors: Option<usize>,
    /// K* stay/move blend in (0, 1].
    #[arg(long)]
    blend: Option<f64>,
    /// MLP hidden layer sizes, comma separated.
    #[arg(long)]
    hidden: Option<String>,
    /// Learning rate (mlp, ovr).
    #[arg(long)]
    eta: Option<f64>,
    /// Training epochs (mlp, ovr).
    #[arg(long)]
    epochs: Option<usize>,
    /// L2 penalty (ovr).
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a raw CSV into a dataset artifact.
    Ingest {
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        encoding: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print record and class counts of a dataset artifact.
    Stats {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train one classifier and persist the model.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        classifier: ClassifierArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_model: Option<PathBuf>,
    },
    /// Score a dataset with a saved model.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pooled stratified k-fold cross-validation with a metrics report.
    Crossval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        classifier: ClassifierArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_report: Option<PathBuf>,
    },
    /// Bin incident coordinates into a density grid.
    Density {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Explicit bounds: lat_min,lat_max,lon_min,lon_max.
        #[arg(long)]
        bounds: Option<String>,
        /// Region preset code (e.g. R5) resolved via --regions.
        #[arg(long)]
        region: Option<String>,
        /// Region presets file.
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// Gaussian bandwidth in cells; omit for a raw histogram.
        #[arg(long)]
        smooth: Option<f64>,
        #[arg(long)]
        out_grid: Option<PathBuf>,
    },
    /// Render a report artifact as a text table or CSV.
    Report {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// text | csv
        #[arg(long)]
        format: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "qmedley", version, about = "Train, explain and benchmark hybrid quantum-classical classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Bundled dataset (iris, wine), planted:<rule>:<informative>:<noise>[:<rows>], or a CSV path
    #[arg(long)]
    pub data: Option<String>,
    /// Target column of a CSV file
    #[arg(long)]
    pub target: Option<String>,
    /// Number of appended standard-normal noise columns
    #[arg(long)]
    pub noise: Option<usize>,
    /// Number of appended noisy copies of original columns
    #[arg(long)]
    pub redundant: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with default values for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Held-out share of each class
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Replace a numeric target by above/below-median classes
    #[arg(long)]
    pub binarize_target: bool,
    /// Stratified subsample to at most this many rows
    #[arg(long)]
    pub max_rows: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ExplainArgs {
    /// Permutation repeats per feature
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Weight the two components by their spread
    #[arg(long)]
    pub adaptive: bool,
    /// Add pairwise joint-permutation synergy
    #[arg(long)]
    pub interaction_pi: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a hybrid model and report its test accuracy
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Learner kind (dt, rf, extra, gb, ada, lda, logistic, nb, perceptron, ridge, knn)
        #[arg(long)]
        model: Option<String>,
        /// amplitude or kernel
        #[arg(long)]
        model_type: Option<String>,
    },
    /// Explain a trained model on its training split
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        explain: ExplainArgs,
        /// Model file written by `train` (default: <out>/model.json)
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Write the JSON report only
        #[arg(long)]
        no_chart: bool,
    },
    /// Explainer ablation grid on classical DT/RF models
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Permutation repeats per feature
        #[arg(long)]
        repeats: Option<usize>,
        /// Comma-separated datasets (default: iris,wine)
        #[arg(long)]
        datasets: Option<String>,
        /// Comma-separated seeds (default: 0,1,2)
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Classical learners against their amplitude-encoded twins
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated datasets (default: iris,wine)
        #[arg(long)]
        datasets: Option<String>,
        /// Comma-separated learner kinds (default: dt,rf)
        #[arg(long)]
        models: Option<String>,
        /// Comma-separated seeds (default: 0,1,2)
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Render saved reports as SVG bar charts
    Plot {
        /// Report JSON files; more than one gives a multi-panel figure
        #[arg(long, required = true, num_args = 1..)]
        report: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
        /// Panel grid as ROWSxCOLS
        #[arg(long)]
        grid: Option<String>,
        /// Also print text charts
        #[arg(long)]
        text: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { common, model, model_type } => commands::train(common, model, model_type),
        Command::Explain {
            common,
            explain,
            model_file,
            no_chart,
        } => commands::explain(common, explain, model_file, no_chart),
        Command::Ablate {
            common,
            repeats,
            datasets,
            seeds,
        } => commands::ablate(common, repeats, datasets, seeds),
        Command::Benchmark {
            common,
            datasets,
            models,
            seeds,
        } => commands::benchmark(common, datasets, models, seeds),
        Command::Plot {
            report,
            out,
            title,
            grid,
            text,
        } => commands::plot(report, out, title, grid, text),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

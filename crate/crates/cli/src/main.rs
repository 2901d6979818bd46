//! `scalex`: fit downstream scaling laws to checkpoint logs and act on them.
//!
//! Exit status: 0 on success, 2 for unusable input, 3 when the data or law
//! cannot deliver the requested answer (law domain, failed fit, unreachable
//! target).

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scalex_core::{LanguageMixture, LawKind, MetricKind, TranslationTask};

use settings::{TokenList, Tokens};

#[derive(Debug, Parser)]
#[command(name = "scalex", version, about = "Downstream scaling-law toolkit")]
struct Cli {
    /// `key=value` settings file (overrides SCALEX_CONFIG; flags override both).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Picks one series out of a multi-series observation CSV.
#[derive(Debug, Args, Clone, Default)]
struct SeriesSelect {
    /// Metric tag of the series to use (bleu, rouge, comet, ce, score).
    #[arg(long)]
    metric: Option<MetricKind>,
    /// Finetuning token count of the series to use.
    #[arg(long = "d-f", value_name = "TOKENS")]
    d_f: Option<Tokens>,
}

#[derive(Debug, Args, Clone, Default)]
struct FitFlags {
    /// Law family; defaults to the metric's natural law.
    #[arg(long)]
    law: Option<LawKind>,
    /// Huber transition width (default 0.1 for log, 1e-3 for power).
    #[arg(long)]
    delta: Option<f64>,
    /// Number of smallest-token checkpoints used for fitting (default 4).
    #[arg(long = "train-first", value_name = "N")]
    train_first: Option<usize>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "grad-tol")]
    grad_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a law to an observation CSV and print the JSON report.
    Fit {
        csv: PathBuf,
        #[command(flatten)]
        select: SeriesSelect,
        #[command(flatten)]
        fit: FitFlags,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evaluate fitted parameters at token counts; prints `d_p,predicted` CSV.
    Predict {
        /// Fit report or `{law, ...}` parameter JSON.
        params: PathBuf,
        #[arg(required = true, value_name = "D_P")]
        d_p: Vec<Tokens>,
    },
    /// Token count at which a fitted log-law reaches a target score.
    Invert { params: PathBuf, target: f64 },
    /// Alignment score between a pretraining mixture and a translation task.
    Align {
        /// e.g. `en=0.5,fr=0.5`
        #[arg(long)]
        mixture: LanguageMixture,
        /// e.g. `en-fr`
        #[arg(long)]
        task: TranslationTask,
    },
    /// Monotonicity, break and score/cross-entropy checks for every series.
    Diagnose {
        csv: PathBuf,
        #[command(flatten)]
        fit: FitFlags,
        #[arg(long = "noise-tol")]
        noise_tol: Option<f64>,
        #[arg(long = "break-tol")]
        break_tol: Option<f64>,
        #[arg(long = "r2-threshold")]
        r2_threshold: Option<f64>,
    },
    /// Run the pretraining-data valuation procedure on a score series.
    Advise {
        csv: PathBuf,
        #[command(flatten)]
        select: SeriesSelect,
        #[command(flatten)]
        fit: FitFlags,
        /// Score the downstream model should reach.
        #[arg(long)]
        target: Option<f64>,
        /// Score of a model trained on the task without pretraining.
        #[arg(long)]
        baseline: Option<f64>,
        /// Comma-separated token counts to predict at (e.g. `2e11,5e11`).
        #[arg(long)]
        candidates: Option<TokenList>,
        #[arg(long = "noise-tol")]
        noise_tol: Option<f64>,
        #[arg(long = "break-tol")]
        break_tol: Option<f64>,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        hypotheses: PathBuf,
        references: PathBuf,
        /// Report the score on a 0-100 scale.
        #[arg(long)]
        percent: bool,
        /// Raise zero n-gram precisions to 1e-9.
        #[arg(long)]
        smooth: bool,
    },
    /// Observed points plus fitted-curve samples as `d_p,observed,predicted` CSV.
    Plot {
        params: PathBuf,
        /// Observation CSV whose points are included.
        #[arg(long)]
        observations: Option<PathBuf>,
        #[command(flatten)]
        select: SeriesSelect,
        /// Comma-separated token counts to sample the curve at.
        #[arg(long, default_value = "")]
        grid: TokenList,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;

use error::CliError;

/// Class-prior estimation from noisy positive and unlabeled data.
#[derive(Debug, Parser)]
#[command(name = "noisypu", version, about)]
struct Cli {
    /// Log verbosity on stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// CSV of unlabeled points, one row per point.
    #[arg(long)]
    unlabeled: PathBuf,
    /// CSV of labeled points with the same columns.
    #[arg(long)]
    labeled: PathBuf,
    /// Estimate on out-of-bag scores of a labeled-vs-unlabeled ensemble.
    #[arg(long, conflicts_with = "pca")]
    transform: bool,
    /// Project the pooled sample onto its top K principal components.
    #[arg(long, value_name = "K", default_value_t = 0)]
    pca: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate class priors and print the estimate as JSON.
    Estimate {
        #[command(flatten)]
        sample: SampleArgs,
        /// msgmm, alphamax-n, alphamax or all.
        #[arg(long, default_value = "alphamax-n")]
        method: String,
        /// With --transform, save the trained ensemble here.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Per-row posterior p(Y=1|x) from a saved ensemble and an estimate.
    Posterior {
        #[arg(long)]
        model: PathBuf,
        /// Estimate JSON as printed by `estimate`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Override |U|/|L| recorded in the model.
        #[arg(long)]
        ratio: Option<f64>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark config and print its summary table.
    SynthBench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and summary.csv.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Print the full JSON report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Run the identifiability property suite on random discrete measures.
    OracleCheck {
        #[arg(long, default_value_t = 12)]
        atoms: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export the AlphaMax log-likelihood curve with its elbow.
    Curve {
        #[command(flatten)]
        sample: SampleArgs,
        /// Curve for the labeled sample inside the unlabeled one (β⁺)
        /// instead of the reverse.
        #[arg(long)]
        reverse: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset (unlabeled.csv, labeled.csv, truth.json).
    Synth {
        #[arg(long, default_value = "gaussian")]
        family: String,
        #[arg(long)]
        delta_mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        n_unlabeled: usize,
        #[arg(long, default_value_t = 1000)]
        n_labeled: usize,
        #[arg(long, default_value_t = 1)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Estimate {
            sample,
            method,
            model_out,
        } => commands::estimate(&sample, &method, model_out.as_deref()),
        Command::Posterior {
            model,
            params,
            input,
            ratio,
            out,
        } => commands::posterior(&model, &params, &input, ratio, out.as_deref()),
        Command::SynthBench {
            config,
            repeats,
            seed,
            output,
            workers,
            json,
        } => commands::synth_bench(&config, repeats, seed, output, workers, json),
        Command::OracleCheck { atoms, trials, seed } => commands::oracle_check(atoms, trials, seed),
        Command::Curve { sample, reverse, out } => commands::curve(&sample, reverse, &out),
        Command::Synth {
            family,
            delta_mu,
            alpha,
            beta,
            n_unlabeled,
            n_labeled,
            dims,
            seed,
            out,
        } => commands::synth(
            &noisypu::datagen::SyntheticSpec {
                family: commands::parse_family(&family)?,
                delta_mu,
                alpha,
                beta,
                n_unlabeled,
                n_labeled,
                seed,
                dims,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            // one line: kind, exit code and a JSON-quoted message
            let message = serde_json::to_string(&e.to_string()).unwrap_or_default();
            eprintln!("error kind={} code={} message={message}", e.kind(), e.exit_code());
            ExitCode::from(e.exit_code())
        }
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use noisypu::alphamax::{alphamax_samples, AlphaMaxConfig};
use noisypu::datagen::{gen_synthetic, load_matrix_csv, Family, SyntheticSpec};
use noisypu::experiment::{prepare, run, run_method, EstimatorConfigs, ExperimentConfig, Prepared, Preprocess};
use noisypu::measures::run_oracle_suite;
use noisypu::transform::{posterior as posterior_of, transform, ScoreModel, TransformConfig};
use noisypu::{Method, PosteriorParams, PriorEstimate, PuDataset, PuError};

use crate::error::CliError;
use crate::SampleArgs;

const IDENTICAL_SAMPLES: &str =
    "unlabeled and labeled samples are identical; the priors are not identifiable and the estimate is meaningless";

pub fn parse_family(name: &str) -> Result<Family, CliError> {
    match name {
        "gaussian" => Ok(Family::Gaussian),
        "laplace" => Ok(Family::Laplace),
        other => Err(CliError::Usage(format!("unknown family {other:?} (gaussian or laplace)"))),
    }
}

fn parse_methods(name: &str) -> Result<Vec<Method>, CliError> {
    if name == "all" {
        return Ok(Method::ALL.to_vec());
    }
    Ok(vec![name.parse::<Method>()?])
}

fn load_sample(args: &SampleArgs) -> Result<PuDataset, CliError> {
    let unlabeled = load_matrix_csv(&args.unlabeled)?;
    let labeled = load_matrix_csv(&args.labeled)?;
    Ok(PuDataset::new(unlabeled, labeled)?)
}

fn preprocess(args: &SampleArgs) -> Result<Preprocess, CliError> {
    Ok(Preprocess::from_flags(args.transform, args.pca)?)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(PuError::from)?;
    writeln!(std::io::stdout().lock(), "{text}")?;
    Ok(())
}

pub fn estimate(args: &SampleArgs, method: &str, model_out: Option<&Path>) -> Result<ExitCode, CliError> {
    let methods = parse_methods(method)?;
    let pre = preprocess(args)?;
    if model_out.is_some() && pre != Preprocess::Transform {
        return Err(CliError::Usage("--model-out needs --transform".into()));
    }
    let data = load_sample(args)?;
    let identical = data.unlabeled == data.labeled;
    if identical {
        log::warn!("{IDENTICAL_SAMPLES}");
    }
    let configs = EstimatorConfigs::default();
    let prepared = match (pre, model_out) {
        (Preprocess::Transform, Some(path)) => {
            let (model, scores) = transform(&data, &configs.network, args.seed)?;
            model.save(path)?;
            Prepared {
                data: scores.to_dataset(),
                scores: Some(scores),
            }
        }
        _ => prepare(&data, pre, &configs.network, args.seed)?,
    };
    let mut estimates: Vec<PriorEstimate> = Vec::new();
    for m in methods.iter().copied() {
        let mut est = run_method(m, &prepared, &configs, args.seed)?;
        if identical {
            est.warnings.push(IDENTICAL_SAMPLES.into());
        }
        for w in &est.warnings {
            log::warn!("{m}: {w}");
        }
        estimates.push(est);
    }
    if let [single] = estimates.as_slice() {
        print_json(single)?;
    } else {
        print_json(&estimates)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn posterior(
    model: &Path,
    params: &Path,
    input: &Path,
    ratio: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let model = ScoreModel::load(model)?;
    let text = std::fs::read_to_string(params)?;
    let estimate: PriorEstimate = serde_json::from_str(&text).map_err(PuError::from)?;
    let ratio = ratio.unwrap_or(model.n_unlabeled as f64 / model.n_labeled as f64);
    let params = PosteriorParams::new(estimate.alpha_star, estimate.beta_star, ratio)?;
    let points = load_matrix_csv(input)?;
    let scores = model.score(&points)?;
    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(sink, "score,posterior")?;
    for tau in scores {
        writeln!(sink, "{tau},{}", posterior_of(tau, &params)?)?;
    }
    sink.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn synth_bench(
    config: &Path,
    repeats: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    workers: Option<usize>,
    json: bool,
) -> Result<ExitCode, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(r) = repeats {
        cfg.repeats = r;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if output.is_some() {
        cfg.output = output;
    }
    cfg.validate()?;
    let report = run(&cfg)?;
    if json {
        writeln!(std::io::stdout().lock(), "{}", report.to_json()?)?;
    } else {
        report.write_summary_csv(std::io::stdout().lock())?;
    }
    if report.aggregates.iter().all(|a| a.successes == 0) {
        return Err(PuError::EstimationFailed("every repeat failed for every method".into()).into());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn oracle_check(atoms: usize, trials: usize, seed: u64) -> Result<ExitCode, CliError> {
    let report = run_oracle_suite(atoms, trials, seed)?;
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        writeln!(
            out,
            "{} {} cases={} failures={} max_error={:e} tolerance={:e}",
            if c.passed() { "ok" } else { "FAILED" },
            c.name,
            c.cases,
            c.failures,
            c.max_error,
            c.tolerance
        )?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn curve(args: &SampleArgs, reverse: bool, out: &Path) -> Result<ExitCode, CliError> {
    let data = load_sample(args)?;
    let pre = preprocess(args)?;
    let network = TransformConfig::default();
    let prepared = prepare(&data, pre, &network, args.seed)?.data;
    let (mixture, component) = if reverse {
        (prepared.labeled.view(), prepared.unlabeled.view())
    } else {
        (prepared.unlabeled.view(), prepared.labeled.view())
    };
    let res = alphamax_samples(mixture, component, &AlphaMaxConfig::default())?;
    for w in &res.warnings {
        log::warn!("{w}");
    }
    res.curve
        .write_csv(std::fs::File::create(out)?, Some(res.estimate))?;
    writeln!(std::io::stdout().lock(), "{}", res.estimate)?;
    Ok(ExitCode::SUCCESS)
}

pub fn synth(spec: &SyntheticSpec, out: &Path) -> Result<ExitCode, CliError> {
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    gen_synthetic(spec)?.write_to_dir(out)?;
    Ok(ExitCode::SUCCESS)
}

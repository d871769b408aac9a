use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig};
use super::pipeline::{estimate_all, EstimatorConfigs, Preprocess};
use crate::datagen::{gen_synthetic, load_csv, pu_split, PuDataset};
use crate::error::{PuError, Result};
use crate::estimate::{Method, PriorEstimate};
use crate::math::{mean, std_dev};
use crate::rng::derive_seed;

pub const REPORT_FORMAT: &str = "noisypu-run-report/1";

/// Outcome of one method on one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<PriorEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub index: usize,
    pub seed: u64,
    pub alpha_true: Option<f64>,
    pub beta_true: Option<f64>,
    pub results: Vec<MethodResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    /// Mean of `|α̂* − α|` over successful repeats.
    pub mae: Option<f64>,
    /// Standard error of that mean.
    pub std_error: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatRecord>,
    pub aggregates: Vec<MethodAggregate>,
}

impl RunReport {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows of `family,alpha,beta,method,mae,std_error,successes,failures`.
    pub fn write_summary_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let (alpha, beta) = match &self.config.data {
            DataSource::Synthetic(s) => (s.alpha.to_string(), s.beta.to_string()),
            DataSource::Csv(c) => {
                let a = mean(&self.repeats.iter().filter_map(|r| r.alpha_true).collect::<Vec<_>>());
                (if a.is_nan() { String::new() } else { a.to_string() }, c.split.beta.to_string())
            }
        };
        let family = self.config.data.family_label();
        let io = |e: csv::Error| PuError::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["family", "alpha", "beta", "method", "mae", "std_error", "successes", "failures"])
            .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for a in &self.aggregates {
            w.write_record([
                family.clone(),
                alpha.clone(),
                beta.clone(),
                a.method.name().to_string(),
                opt(a.mae),
                opt(a.std_error),
                a.successes.to_string(),
                a.failures.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json` and `summary.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        self.write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?)?;
        Ok(())
    }
}

/// Dataset for repeat with seed `seed`.
fn repeat_data(source: &DataSource, table: Option<&(Array2<f64>, Vec<bool>)>, seed: u64) -> Result<PuDataset> {
    match source {
        DataSource::Synthetic(s) => gen_synthetic(&s.spec(derive_seed(seed, 0xda7a))),
        DataSource::Csv(c) => {
            let (points, labels) = table.expect("csv table loaded");
            Ok(pu_split(points, labels, &c.split, derive_seed(seed, 0xda7a))?.dataset)
        }
    }
}

fn run_repeat(
    config: &ExperimentConfig,
    table: Option<&(Array2<f64>, Vec<bool>)>,
    configs: &EstimatorConfigs,
    pre: Preprocess,
    index: usize,
) -> RepeatRecord {
    let seed = config.base_seed.wrapping_add(index as u64);
    let start = Instant::now();
    let fail_all = |reason: String| -> Vec<MethodResult> {
        config
            .methods
            .iter()
            .map(|&m| MethodResult {
                method: m,
                estimate: None,
                abs_error: None,
                error: Some(reason.clone()),
            })
            .collect()
    };
    let (truth, results) = match repeat_data(&config.data, table, seed) {
        Err(e) => (None, fail_all(e.to_string())),
        Ok(data) => {
            let truth = data.truth.as_ref().map(|t| (t.alpha_true, t.beta_true));
            let results = match estimate_all(&data, &config.methods, pre, configs, seed) {
                Err(e) => fail_all(e.to_string()),
                Ok(list) => list
                    .into_iter()
                    .map(|(method, r)| match r {
                        Ok(est) => MethodResult {
                            method,
                            abs_error: truth.map(|(a, _)| (est.alpha_star - a).abs()),
                            estimate: Some(est),
                            error: None,
                        },
                        Err(e) => MethodResult {
                            method,
                            estimate: None,
                            abs_error: None,
                            error: Some(e.to_string()),
                        },
                    })
                    .collect(),
            };
            (truth, results)
        }
    };
    RepeatRecord {
        index,
        seed,
        alpha_true: truth.map(|t| t.0),
        beta_true: truth.map(|t| t.1),
        results,
        wall_time_secs: config.timings.then(|| start.elapsed().as_secs_f64()),
    }
}

fn aggregate(methods: &[Method], repeats: &[RepeatRecord]) -> Vec<MethodAggregate> {
    methods
        .iter()
        .map(|&m| {
            let results: Vec<&MethodResult> = repeats
                .iter()
                .flat_map(|r| r.results.iter().filter(move |x| x.method == m))
                .collect();
            let errors: Vec<f64> = results.iter().filter_map(|r| r.abs_error).collect();
            let successes = results.iter().filter(|r| r.estimate.is_some()).count();
            MethodAggregate {
                method: m,
                mae: (!errors.is_empty()).then(|| mean(&errors)),
                std_error: (errors.len() > 1).then(|| std_dev(&errors) / (errors.len() as f64).sqrt()),
                successes,
                failures: results.len() - successes,
            }
        })
        .collect()
}

/// Runs every repeat (seed `base_seed + i`) on a worker pool and assembles
/// the report. Writes it to `config.output` when set.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let pre = Preprocess::from_flags(config.transform, config.pca)?;
    let table = match &config.data {
        DataSource::Csv(c) => Some(Arc::new(load_csv(&c.path, &c.schema)?)),
        DataSource::Synthetic(_) => None,
    };
    let configs = EstimatorConfigs {
        msgmm: config.msgmm.clone(),
        alphamax: config.alphamax.clone(),
        network: config.network.clone(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PuError::Config(format!("cannot start worker pool: {e}")))?;
    let repeats: Vec<RepeatRecord> = pool.install(|| {
        (0..config.repeats)
            .into_par_iter()
            .map(|i| run_repeat(config, table.as_deref(), &configs, pre, i))
            .collect()
    });
    for r in &repeats {
        for m in r.results.iter().filter(|m| m.error.is_some()) {
            log::warn!("repeat {} {}: {}", r.index, m.method, m.error.as_deref().unwrap_or(""));
        }
    }
    let report = RunReport {
        format: REPORT_FORMAT.to_string(),
        aggregates: aggregate(&config.methods, &repeats),
        config: config.clone(),
        repeats,
    };
    if let Some(dir) = &config.output {
        report.write_to_dir(dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Family;
    use crate::experiment::config::SyntheticSource;

    fn small(alpha: f64, repeats: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::synthetic(SyntheticSource {
            family: Family::Gaussian,
            delta_mu: 4.0,
            alpha,
            beta: 0.9,
            n_unlabeled: 2000,
            n_labeled: 500,
            dims: 1,
        });
        c.repeats = repeats;
        c.base_seed = 100;
        c.msgmm.restarts = 3;
        c
    }

    #[test]
    fn aggregates_match_records() {
        let report = run(&small(0.3, 3)).unwrap();
        assert_eq!(report.repeats.len(), 3);
        for agg in &report.aggregates {
            let errs: Vec<f64> = report
                .repeats
                .iter()
                .flat_map(|r| r.results.iter())
                .filter(|x| x.method == agg.method)
                .filter_map(|x| x.abs_error)
                .collect();
            assert!((agg.mae.unwrap() - mean(&errs)).abs() < 1e-12);
            assert_eq!(agg.successes + agg.failures, 3);
        }
        assert_eq!(report.repeats[2].seed, 102);
    }

    #[test]
    fn zero_prior_sanity_band() {
        let report = run(&small(0.0, 1)).unwrap();
        for m in [Method::Msgmm, Method::AlphaMaxN] {
            let a = report.aggregate(m).unwrap();
            assert_eq!(a.successes, 1);
            assert!(a.mae.unwrap() <= 0.1, "{m}: {:?}", a.mae);
        }
    }

    #[test]
    fn deterministic_report() {
        let c = small(0.3, 2);
        assert_eq!(run(&c).unwrap().to_json().unwrap(), run(&c).unwrap().to_json().unwrap());
    }

    #[test]
    fn failures_are_counted() {
        let mut c = small(0.3, 2);
        // histogram AlphaMax stops at three dimensions
        if let DataSource::Synthetic(s) = &mut c.data {
            s.dims = 4;
        }
        c.methods = vec![Method::AlphaMaxN];
        let report = run(&c).unwrap();
        for a in &report.aggregates {
            assert_eq!(a.failures, 2);
            assert_eq!(a.mae, None);
        }
        let mut csv = Vec::new();
        report.write_summary_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("gaussian,0.3,0.9,"));
    }
}

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fraction_true, select_rows, PuDataset, Truth};
use crate::error::{PuError, Result};
use crate::rng::rng_from_seed;

/// Parameters of the selection/labeling process.
///
/// A point is first selected for a labeling attempt with probability
/// `select_prob` (independently of `X` and `Y`); unselected points become
/// unlabeled. An attempt on a positive succeeds with probability `gamma1`
/// and on a negative with probability `gamma0`; successes join the noisy
/// positive sample and failures are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub select_prob: f64,
    pub gamma1: f64,
    pub gamma0: f64,
}

impl LabelingConfig {
    pub fn new(select_prob: f64, gamma1: f64, gamma0: f64) -> Result<Self> {
        let cfg = Self {
            select_prob,
            gamma1,
            gamma0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.select_prob) {
            return Err(PuError::InvalidParams(format!("select_prob {} not in (0,1)", self.select_prob)));
        }
        if !open(self.gamma1) {
            return Err(PuError::InvalidParams(format!("gamma1 {} not in (0,1)", self.gamma1)));
        }
        if !(0.0..1.0).contains(&self.gamma0) || self.gamma0 >= self.gamma1 {
            return Err(PuError::InvalidParams(format!(
                "gamma0 {} must lie in [0, gamma1)",
                self.gamma0
            )));
        }
        Ok(())
    }

    /// Proportion of true positives among successfully labeled points.
    pub fn implied_beta(&self, alpha: f64) -> f64 {
        let pos = self.gamma1 * alpha;
        let denom = pos + self.gamma0 * (1.0 - alpha);
        if denom == 0.0 {
            return 1.0;
        }
        pos / denom
    }
}

pub fn simulate_labeling(
    points: &Array2<f64>,
    labels: &[bool],
    config: LabelingConfig,
    seed: u64,
) -> Result<PuDataset> {
    config.validate()?;
    if labels.len() != points.nrows() {
        return Err(PuError::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            points.nrows()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let (mut u_rows, mut l_rows) = (Vec::new(), Vec::new());
    for (i, &y) in labels.iter().enumerate() {
        if !rng.random_bool(config.select_prob) {
            u_rows.push(i);
            continue;
        }
        let success = if y { config.gamma1 } else { config.gamma0 };
        if rng.random_bool(success) {
            l_rows.push(i);
        }
        // failed attempts are dropped
    }
    if u_rows.is_empty() || l_rows.is_empty() {
        return Err(PuError::Degenerate(format!(
            "labeling produced |U|={} and |L|={}",
            u_rows.len(),
            l_rows.len()
        )));
    }
    let alpha = fraction_true(labels);
    let truth = Truth {
        labels_unlabeled: u_rows.iter().map(|&i| labels[i]).collect(),
        labels_labeled: l_rows.iter().map(|&i| labels[i]).collect(),
        alpha_true: alpha,
        beta_true: config.implied_beta(alpha),
    };
    Ok(PuDataset {
        unlabeled: select_rows(points, &u_rows),
        labeled: select_rows(points, &l_rows),
        truth: Some(truth),
    })
}

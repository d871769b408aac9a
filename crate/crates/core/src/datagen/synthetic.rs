use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PuDataset, Truth};
use crate::error::{PuError, Result};
use crate::rng::{child_rng, PuRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Unit-variance normal components.
    Gaussian,
    /// Unit-scale Laplace components.
    Laplace,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplace => "laplace",
        }
    }

    fn sample(&self, rng: &mut PuRng, location: f64) -> f64 {
        match self {
            Family::Gaussian => location + rng.sample::<f64, _>(StandardNormal),
            Family::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                location - u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

fn one() -> usize {
    1
}

/// Two-component benchmark: negatives centred at 0, positives at `delta_mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub delta_mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_unlabeled: usize,
    pub n_labeled: usize,
    pub seed: u64,
    /// Number of i.i.d. coordinates per point; every coordinate is drawn from
    /// the point's class component.
    #[serde(default = "one")]
    pub dims: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(PuError::InvalidParams(format!("alpha {} not in [0,1)", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(PuError::InvalidParams(format!("beta {} not in (0,1]", self.beta)));
        }
        if self.n_unlabeled == 0 || self.n_labeled == 0 {
            return Err(PuError::InvalidParams("sample sizes must be at least 1".into()));
        }
        if self.dims == 0 {
            return Err(PuError::InvalidParams("dims must be at least 1".into()));
        }
        if !self.delta_mu.is_finite() {
            return Err(PuError::InvalidParams("delta_mu must be finite".into()));
        }
        Ok(())
    }
}

fn draw_sample(
    spec: &SyntheticSpec,
    rng: &mut PuRng,
    n: usize,
    proportion: f64,
) -> (Array2<f64>, Vec<bool>) {
    let mut points = Array2::zeros((n, spec.dims));
    let mut labels = Vec::with_capacity(n);
    for mut row in points.rows_mut() {
        let positive = rng.random_bool(proportion);
        let location = if positive { spec.delta_mu } else { 0.0 };
        for v in row.iter_mut() {
            *v = spec.family.sample(rng, location);
        }
        labels.push(positive);
    }
    (points, labels)
}

/// Draws `U` from `αf₁ + (1−α)f₀` and `L` from `βf₁ + (1−β)f₀`.
/// Deterministic in `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<PuDataset> {
    spec.validate()?;
    let mut rng_u = child_rng(spec.seed, 0x5511);
    let mut rng_l = child_rng(spec.seed, 0x1a6e);
    let (unlabeled, labels_unlabeled) = draw_sample(spec, &mut rng_u, spec.n_unlabeled, spec.alpha);
    let (labeled, labels_labeled) = draw_sample(spec, &mut rng_l, spec.n_labeled, spec.beta);
    Ok(PuDataset {
        unlabeled,
        labeled,
        truth: Some(Truth {
            labels_unlabeled,
            labels_labeled,
            alpha_true: spec.alpha,
            beta_true: spec.beta,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, delta_mu: f64, alpha: f64, beta: f64, n_u: usize) -> SyntheticSpec {
        SyntheticSpec {
            family,
            delta_mu,
            alpha,
            beta,
            n_unlabeled: n_u,
            n_labeled: 1000,
            seed: 42,
            dims: 1,
        }
    }

    #[test]
    fn alpha_zero_draws_only_negatives() {
        let ds = gen_synthetic(&spec(Family::Gaussian, 2.0, 0.0, 0.95, 2000)).unwrap();
        assert!(ds.truth.unwrap().labels_unlabeled.iter().all(|l| !l));
    }

    #[test]
    fn unlabeled_mean_matches_mixture_mean() {
        let ds = gen_synthetic(&spec(Family::Gaussian, 2.0, 0.25, 0.95, 10_000)).unwrap();
        let mean = ds.unlabeled.mean().unwrap();
        assert!((mean - 0.5).abs() < 0.05, "mean {mean}");
        assert_eq!(ds.labeled.nrows(), 1000);
    }

    #[test]
    fn laplace_negative_component_kurtosis() {
        let ds = gen_synthetic(&spec(Family::Laplace, 1.0, 0.5, 0.75, 50_000)).unwrap();
        let truth = ds.truth.unwrap();
        let xs: Vec<f64> = ds
            .unlabeled
            .column(0)
            .iter()
            .zip(&truth.labels_unlabeled)
            .filter(|(_, y)| !**y)
            .map(|(x, _)| *x)
            .collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let kurtosis = m4 / (m2 * m2);
        assert!((kurtosis - 6.0).abs() < 1.2, "kurtosis {kurtosis}");
        assert!((m2 - 2.0).abs() < 0.1, "variance {m2}");
    }

    #[test]
    fn deterministic_given_seed() {
        let s = spec(Family::Laplace, 1.0, 0.3, 0.9, 500);
        assert_eq!(gen_synthetic(&s).unwrap(), gen_synthetic(&s).unwrap());
        let mut other = s.clone();
        other.seed += 1;
        assert_ne!(gen_synthetic(&s).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn multi_dim_rows_share_class() {
        let mut s = spec(Family::Gaussian, 8.0, 0.5, 1.0, 200);
        s.dims = 2;
        let ds = gen_synthetic(&s).unwrap();
        assert_eq!(ds.unlabeled.ncols(), 2);
        for (row, y) in ds.unlabeled.rows().into_iter().zip(ds.truth.unwrap().labels_unlabeled) {
            let expected = if y { 8.0 } else { 0.0 };
            assert!(row.iter().all(|v| (v - expected).abs() < 5.0));
        }
    }

    #[test]
    fn validation() {
        assert!(gen_synthetic(&spec(Family::Gaussian, 1.0, 1.0, 0.9, 10)).is_err());
        assert!(gen_synthetic(&spec(Family::Gaussian, 1.0, 0.2, 0.0, 10)).is_err());
        assert!(gen_synthetic(&spec(Family::Gaussian, 1.0, 0.2, 0.9, 0)).is_err());
    }
}

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{fraction_true, select_rows, PuDataset, Truth};
use crate::error::{PuError, Result};
use crate::rng::rng_from_seed;

fn default_max_unlabeled() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub n_labeled: usize,
    /// Fraction of true positives placed in the labeled sample.
    pub beta: f64,
    #[serde(default = "default_max_unlabeled")]
    pub max_unlabeled: usize,
}

/// A split dataset plus the source row of every sampled point.
#[derive(Debug, Clone)]
pub struct PuSplit {
    pub dataset: PuDataset,
    pub labeled_rows: Vec<usize>,
    pub unlabeled_rows: Vec<usize>,
    /// Rows removed by the unlabeled cap.
    pub discarded_rows: Vec<usize>,
}

/// Builds a labeled sample with exactly `round(β·n_labeled)` positives; every
/// remaining row becomes unlabeled, subsampled uniformly down to
/// `max_unlabeled` when larger.
pub fn pu_split(points: &Array2<f64>, labels: &[bool], config: &SplitConfig, seed: u64) -> Result<PuSplit> {
    if labels.len() != points.nrows() {
        return Err(PuError::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            points.nrows()
        )));
    }
    if !(config.beta > 0.0 && config.beta <= 1.0) {
        return Err(PuError::InvalidParams(format!("beta {} not in (0,1]", config.beta)));
    }
    if config.n_labeled == 0 || config.max_unlabeled == 0 {
        return Err(PuError::InvalidParams("n_labeled and max_unlabeled must be positive".into()));
    }
    let n_pos = (config.beta * config.n_labeled as f64).round() as usize;
    let n_neg = config.n_labeled - n_pos;

    let mut positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.len() < n_pos || negatives.len() < n_neg {
        return Err(PuError::invalid(format!(
            "need {n_pos} positives and {n_neg} negatives, data has {} and {}",
            positives.len(),
            negatives.len()
        )));
    }
    if points.nrows() == config.n_labeled {
        return Err(PuError::invalid("no rows left for the unlabeled sample"));
    }

    let mut rng = rng_from_seed(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let mut labeled_rows: Vec<usize> = positives[..n_pos]
        .iter()
        .chain(&negatives[..n_neg])
        .copied()
        .collect();
    labeled_rows.sort_unstable();

    let mut in_labeled = vec![false; labels.len()];
    for &i in &labeled_rows {
        in_labeled[i] = true;
    }
    let remaining: Vec<usize> = (0..labels.len()).filter(|&i| !in_labeled[i]).collect();
    let (unlabeled_rows, discarded_rows) = if remaining.len() > config.max_unlabeled {
        let mut keep = vec![false; remaining.len()];
        for k in index::sample(&mut rng, remaining.len(), config.max_unlabeled) {
            keep[k] = true;
        }
        let (kept, dropped): (Vec<_>, Vec<_>) = remaining.iter().zip(&keep).partition(|(_, k)| **k);
        (
            kept.into_iter().map(|(i, _)| *i).collect::<Vec<_>>(),
            dropped.into_iter().map(|(i, _)| *i).collect::<Vec<_>>(),
        )
    } else {
        (remaining, Vec::new())
    };

    let labels_unlabeled: Vec<bool> = unlabeled_rows.iter().map(|&i| labels[i]).collect();
    let labels_labeled: Vec<bool> = labeled_rows.iter().map(|&i| labels[i]).collect();
    let truth = Truth {
        alpha_true: fraction_true(&labels_unlabeled),
        beta_true: n_pos as f64 / config.n_labeled as f64,
        labels_unlabeled,
        labels_labeled,
    };
    Ok(PuSplit {
        dataset: PuDataset {
            unlabeled: select_rows(points, &unlabeled_rows),
            labeled: select_rows(points, &labeled_rows),
            truth: Some(truth),
        },
        labeled_rows,
        unlabeled_rows,
        discarded_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shaped(n: usize, n_pos: usize) -> (Array2<f64>, Vec<bool>) {
        let labels: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
        let points = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        (points, labels)
    }

    fn cfg(n_labeled: usize, beta: f64) -> SplitConfig {
        SplitConfig {
            n_labeled,
            beta,
            max_unlabeled: 10_000,
        }
    }

    #[test]
    fn clean_split_has_only_positives() {
        let (x, y) = shaped(500, 200);
        let split = pu_split(&x, &y, &cfg(100, 1.0), 3).unwrap();
        let truth = split.dataset.truth.unwrap();
        assert_eq!(truth.labels_labeled.len(), 100);
        assert!(truth.labels_labeled.iter().all(|l| *l));
        assert_eq!(truth.beta_true, 1.0);
    }

    #[test]
    fn mushroom_shaped_alpha() {
        let (x, y) = shaped(8124, 3916);
        let split = pu_split(&x, &y, &cfg(1000, 0.75), 5).unwrap();
        let truth = split.dataset.truth.unwrap();
        assert_eq!(truth.labels_labeled.iter().filter(|l| **l).count(), 750);
        assert!((truth.alpha_true - 0.4444).abs() < 1e-4, "{}", truth.alpha_true);
        assert!(split.discarded_rows.is_empty());
    }

    #[test]
    fn bank_shaped_alpha_with_cap() {
        let (x, y) = shaped(45_000, 5188);
        let split = pu_split(&x, &y, &cfg(1000, 1.0), 9).unwrap();
        assert_eq!(split.dataset.n_unlabeled(), 10_000);
        let truth = split.dataset.truth.unwrap();
        assert!((truth.alpha_true - 0.095).abs() < 0.01, "{}", truth.alpha_true);
    }

    #[test]
    fn conservation_and_disjointness() {
        let (x, y) = shaped(12_000, 3000);
        let split = pu_split(&x, &y, &cfg(1000, 0.9), 1).unwrap();
        let total = split.labeled_rows.len() + split.unlabeled_rows.len() + split.discarded_rows.len();
        assert_eq!(total, 12_000);
        let mut seen = vec![0u8; 12_000];
        for &i in split.labeled_rows.iter().chain(&split.unlabeled_rows).chain(&split.discarded_rows) {
            seen[i] += 1;
        }
        assert!(seen.iter().all(|c| *c == 1));
        // rows are carried with their data
        let first = split.unlabeled_rows[0];
        assert_eq!(split.dataset.unlabeled[[0, 1]], (first * 2 + 1) as f64);
    }

    #[test]
    fn insufficient_classes() {
        let (x, y) = shaped(100, 10);
        assert!(pu_split(&x, &y, &cfg(50, 1.0), 0).is_err());
        assert!(pu_split(&x, &y, &cfg(100, 0.1), 0).is_err());
    }
}

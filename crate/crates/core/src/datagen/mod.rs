//! Positive-unlabeled dataset generation and ingestion.
//!
//! Three sources produce a [`PuDataset`]: the selection/labeling process
//! ([`simulate_labeling`]), the univariate Gaussian and Laplace benchmarks
//! ([`gen_synthetic`]), and real tabular data split into a noisy labeled
//! sample and an unlabeled remainder ([`pu_split`]).

mod labeling;
mod pca;
mod split;
mod synthetic;
mod tabular;

pub use labeling::{simulate_labeling, LabelingConfig};
pub use pca::{zscore_pca, PcaProjection};
pub use split::{pu_split, PuSplit, SplitConfig};
pub use synthetic::{gen_synthetic, Family, SyntheticSpec};
pub use tabular::{load_csv, load_matrix_csv, write_matrix_csv, ColumnRef, CsvSchema};

use std::path::Path;

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

/// Ground truth attached to simulated or split data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub labels_unlabeled: Vec<bool>,
    pub labels_labeled: Vec<bool>,
    pub alpha_true: f64,
    pub beta_true: f64,
}

/// An unlabeled sample `U` (rows drawn from `αf₁ + (1−α)f₀`) and a noisy
/// positive sample `L` (rows drawn from `βf₁ + (1−β)f₀`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuDataset {
    pub unlabeled: Array2<f64>,
    pub labeled: Array2<f64>,
    pub truth: Option<Truth>,
}

impl PuDataset {
    pub fn new(unlabeled: Array2<f64>, labeled: Array2<f64>) -> Result<Self> {
        let ds = Self {
            unlabeled,
            labeled,
            truth: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.unlabeled.ncols() != self.labeled.ncols() {
            return Err(PuError::invalid(format!(
                "unlabeled has {} columns but labeled has {}",
                self.unlabeled.ncols(),
                self.labeled.ncols()
            )));
        }
        if self.unlabeled.iter().chain(self.labeled.iter()).any(|v| !v.is_finite()) {
            return Err(PuError::invalid("samples contain non-finite values"));
        }
        if let Some(t) = &self.truth {
            if t.labels_unlabeled.len() != self.unlabeled.nrows()
                || t.labels_labeled.len() != self.labeled.nrows()
            {
                return Err(PuError::invalid("truth labels do not match sample sizes"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.unlabeled.ncols()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.nrows()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.nrows()
    }

    /// `|U| / |L|`, the plug-in estimate of `p(S=0)/p(S=1)`.
    pub fn sample_ratio(&self) -> f64 {
        self.n_unlabeled() as f64 / self.n_labeled() as f64
    }

    /// Rows of `U` followed by rows of `L`.
    pub fn pooled(&self) -> Array2<f64> {
        concatenate(Axis(0), &[self.unlabeled.view(), self.labeled.view()])
            .expect("column counts validated")
    }

    /// Single column `j` of both samples.
    pub fn column(&self, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if j >= self.dim() {
            return Err(PuError::invalid(format!("column {j} out of range for d={}", self.dim())));
        }
        Ok((
            self.unlabeled.column(j).to_vec(),
            self.labeled.column(j).to_vec(),
        ))
    }

    /// Writes `unlabeled.csv`, `labeled.csv` and, when known, `truth.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("unlabeled.csv"), &self.unlabeled)?;
        write_matrix_csv(&dir.join("labeled.csv"), &self.labeled)?;
        if let Some(truth) = &self.truth {
            let file = std::fs::File::create(dir.join("truth.json"))?;
            serde_json::to_writer_pretty(file, truth)?;
        }
        Ok(())
    }
}

pub(crate) fn fraction_true(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|l| **l).count() as f64 / labels.len() as f64
}

pub(crate) fn select_rows(points: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    points.select(Axis(0), rows)
}

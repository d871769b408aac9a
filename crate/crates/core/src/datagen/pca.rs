use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

/// Z-score normalized data projected onto its leading principal axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaProjection {
    /// `n × k` projected data.
    pub scores: Array2<f64>,
    /// `k × d'` unit loadings over the retained (non-constant) columns.
    pub components: Array2<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub kept_columns: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl PcaProjection {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    /// Projects new rows with the fitted normalization and loadings.
    pub fn project(&self, points: &Array2<f64>) -> Array2<f64> {
        let z = Array2::from_shape_fn((points.nrows(), self.kept_columns.len()), |(i, c)| {
            (points[[i, self.kept_columns[c]]] - self.means[c]) / self.stds[c]
        });
        z.dot(&self.components.t())
    }
}

/// Standardizes each column, then keeps the top `k` eigenvectors of the
/// sample covariance. Constant columns are dropped first; `k` is reduced
/// (with a warning) when it exceeds the numerical rank.
pub fn zscore_pca(points: &Array2<f64>, k: usize) -> Result<PcaProjection> {
    let (n, d) = points.dim();
    if n < 2 || d == 0 {
        return Err(PuError::invalid("PCA needs at least two rows and one column"));
    }
    if k == 0 {
        return Err(PuError::invalid("PCA needs k >= 1"));
    }
    let means: Array1<f64> = points.mean_axis(Axis(0)).expect("non-empty");
    let stds: Array1<f64> = points.std_axis(Axis(0), 1.0);
    let kept_columns: Vec<usize> = (0..d)
        .filter(|&j| stds[j] > 1e-12 * (1.0 + means[j].abs()))
        .collect();
    if kept_columns.is_empty() {
        return Err(PuError::Degenerate("every column is constant".into()));
    }
    if kept_columns.len() < d {
        log::warn!("dropped {} zero-variance column(s) before PCA", d - kept_columns.len());
    }
    let means: Vec<f64> = kept_columns.iter().map(|&j| means[j]).collect();
    let stds: Vec<f64> = kept_columns.iter().map(|&j| stds[j]).collect();
    let dk = kept_columns.len();
    let z = Array2::from_shape_fn((n, dk), |(i, c)| (points[[i, kept_columns[c]]] - means[c]) / stds[c]);

    let cov = z.t().dot(&z) / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(DMatrix::from_fn(dk, dk, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..dk).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let top = eigen.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .filter(|&&i| eigen.eigenvalues[i] > 1e-10 * top.max(f64::MIN_POSITIVE))
        .count()
        .max(1);
    let k_eff = k.min(rank);
    if k_eff < k {
        log::warn!("requested {k} principal components but the data has rank {rank}; using {k_eff}");
    }

    let total: f64 = eigen.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut components = Array2::zeros((k_eff, dk));
    let mut explained_variance_ratio = Vec::with_capacity(k_eff);
    for (row, &idx) in order.iter().take(k_eff).enumerate() {
        let v = eigen.eigenvectors.column(idx);
        let pivot = (0..dk)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .expect("non-empty");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..dk {
            components[[row, c]] = sign * v[c];
        }
        explained_variance_ratio.push(eigen.eigenvalues[idx].max(0.0) / total);
    }
    let scores = z.dot(&components.t());
    Ok(PcaProjection {
        scores,
        components,
        explained_variance_ratio,
        kept_columns,
        means,
        stds,
    })
}

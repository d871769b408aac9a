use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::math::std_dev;

/// Minimum size of either sample handed to AlphaMax.
pub const MIN_SAMPLE: usize = 20;

/// Normal-reference bin width `3.5 σ n^(−1/(2+d))`.
pub fn bin_width(sigma: f64, n: usize, dims: usize) -> f64 {
    3.5 * sigma * (n as f64).powf(-1.0 / (2.0 + dims as f64))
}

/// A 1-D histogram on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDensity {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub bin_width: f64,
}

impl HistogramDensity {
    /// Density value (mass / width) of the bin containing `x`, zero outside.
    pub fn density(&self, x: f64) -> f64 {
        let k = self.masses.len();
        if x < self.edges[0] || x > self.edges[k] {
            return 0.0;
        }
        let j = (((x - self.edges[0]) / self.bin_width).floor() as usize).min(k - 1);
        self.masses[j] / self.bin_width
    }
}

/// Histograms of a mixture sample `M` and a component sample `C` on a
/// shared 1-D grid anchored at `min(C)`.
pub fn build_histograms(mixture: &[f64], component: &[f64]) -> Result<(HistogramDensity, HistogramDensity)> {
    check_sizes(mixture.len(), component.len())?;
    let sigma = std_dev(component);
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(PuError::Degenerate("component sample has all-equal scores".into()));
    }
    let b = bin_width(sigma, component.len(), 1);
    let origin = component.iter().copied().fold(f64::INFINITY, f64::min);
    let index = |x: f64| ((x - origin) / b).floor() as i64;
    let all = || mixture.iter().chain(component.iter()).copied();
    let lo = all().map(index).min().expect("non-empty");
    let hi = all().map(index).max().expect("non-empty");
    let k = (hi - lo + 1) as usize;
    let edges = (0..=k).map(|i| origin + (lo + i as i64) as f64 * b).collect::<Vec<_>>();
    let masses = |xs: &[f64]| {
        let mut m = vec![0.0; k];
        for &x in xs {
            m[(index(x) - lo) as usize] += 1.0;
        }
        m.iter_mut().for_each(|v| *v /= xs.len() as f64);
        m
    };
    Ok((
        HistogramDensity {
            edges: edges.clone(),
            masses: masses(mixture),
            bin_width: b,
        },
        HistogramDensity {
            edges,
            masses: masses(component),
            bin_width: b,
        },
    ))
}

fn check_sizes(m: usize, c: usize) -> Result<()> {
    if m < MIN_SAMPLE || c < MIN_SAMPLE {
        return Err(PuError::invalid(format!(
            "AlphaMax needs at least {MIN_SAMPLE} points in each sample (got |M|={m}, |C|={c})"
        )));
    }
    Ok(())
}

/// Bin counts of `M` and `C` over the occupied cells of a shared grid.
///
/// Cells empty in both samples are not stored. Works in 1 to 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    pub widths: Vec<f64>,
    pub origin: Vec<f64>,
    /// Integer grid coordinates of each stored cell.
    pub cells: Vec<Vec<i64>>,
    pub mixture: Vec<f64>,
    pub component: Vec<f64>,
    pub cell_volume: f64,
}

impl BinnedCounts {
    pub fn n_mixture(&self) -> f64 {
        self.mixture.iter().sum()
    }

    pub fn n_component(&self) -> f64 {
        self.component.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the stored cell containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let key = self.key(x);
        self.cells.iter().position(|c| *c == key)
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(self.origin.iter().zip(self.widths.iter()))
            .map(|(v, (o, w))| ((v - o) / w).floor() as i64)
            .collect()
    }
}

pub(crate) const MAX_DIMS: usize = 3;

/// Grid with per-dimension normal-reference widths computed from `C`,
/// anchored at the coordinate-wise minimum of `C`.
pub fn bin_counts(mixture: ArrayView2<f64>, component: ArrayView2<f64>) -> Result<BinnedCounts> {
    let d = component.ncols();
    if mixture.ncols() != d {
        return Err(PuError::invalid("mixture and component samples differ in dimension"));
    }
    if d == 0 || d > MAX_DIMS {
        return Err(PuError::invalid(format!(
            "histogram AlphaMax supports 1 to {MAX_DIMS} dimensions, got {d}"
        )));
    }
    check_sizes(mixture.nrows(), component.nrows())?;
    let mut widths = Vec::with_capacity(d);
    let mut origin = Vec::with_capacity(d);
    for col in component.columns() {
        let xs = col.to_vec();
        let sigma = std_dev(&xs);
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(PuError::Degenerate("component sample has all-equal scores".into()));
        }
        widths.push(bin_width(sigma, xs.len(), d));
        origin.push(xs.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let mut grid = BinnedCounts {
        cell_volume: widths.iter().product(),
        widths,
        origin,
        cells: Vec::new(),
        mixture: Vec::new(),
        component: Vec::new(),
    };
    let mut table: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
    let mut buf = vec![0.0; d];
    for row in mixture.rows() {
        buf.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
        table.entry(grid.key(&buf)).or_default().0 += 1.0;
    }
    for row in component.rows() {
        buf.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
        table.entry(grid.key(&buf)).or_default().1 += 1.0;
    }
    for (cell, (m, c)) in table {
        grid.cells.push(cell);
        grid.mixture.push(m);
        grid.component.push(c);
    }
    Ok(grid)
}

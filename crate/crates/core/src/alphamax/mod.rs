//! Histogram-based AlphaMax and the noise-aware AlphaMax-N.
//!
//! `AlphaMax(M, C)` estimates the largest proportion of the component
//! sample's distribution contained in the mixture sample's distribution.
//! The mixture histogram is re-weighted by `ω`, the likelihood of both
//! samples is maximized under `Σ ω_j v_j = r` for a grid of `r`, and the
//! elbow of the resulting curve is the estimate.

mod curve;
mod elbow;
mod histogram;

pub use curve::{linspace, ll_curve, random_start, CurveProblem, LikelihoodCurve, Solver};
pub use elbow::{elbow, elbow_with, Elbow, ElbowRule};
pub use histogram::{bin_counts, bin_width, build_histograms, BinnedCounts, HistogramDensity, MIN_SAMPLE};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::estimate::{Method, PriorEstimate};
use crate::measures::correction;
use crate::transform::TransformedPU;

/// Upper bound applied to `α⁺` and `β⁺` when their product reaches 1.
pub const PLUS_CLIP: f64 = 0.999;

fn default_grid_points() -> usize {
    50
}
fn default_r_min() -> f64 {
    0.01
}
fn default_r_max() -> f64 {
    0.99
}
fn default_max_iter() -> usize {
    1000
}
fn default_pseudocount() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaMaxConfig {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Iteration cap for the projected-gradient solver.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Mixture count assumed in bins that only the component sample hits.
    #[serde(default = "default_pseudocount")]
    pub pseudocount: f64,
    #[serde(default)]
    pub elbow: ElbowRule,
}

impl Default for AlphaMaxConfig {
    fn default() -> Self {
        Self {
            grid_points: default_grid_points(),
            r_min: default_r_min(),
            r_max: default_r_max(),
            solver: Solver::default(),
            warm_start: true,
            max_iter: default_max_iter(),
            pseudocount: default_pseudocount(),
            elbow: ElbowRule::default(),
        }
    }
}

impl AlphaMaxConfig {
    pub fn r_grid(&self) -> Result<Vec<f64>> {
        if self.grid_points < 5 {
            return Err(PuError::Config("AlphaMax needs at least 5 grid points".into()));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max < 1.0) {
            return Err(PuError::Config(format!(
                "r grid bounds must satisfy 0 < r_min < r_max < 1 (got {}, {})",
                self.r_min, self.r_max
            )));
        }
        Ok(linspace(self.r_min, self.r_max, self.grid_points))
    }
}

/// Result of one `AlphaMax(M, C)` run.
#[derive(Debug, Clone)]
pub struct AlphaMaxResult {
    pub estimate: f64,
    pub curve: LikelihoodCurve,
    pub warnings: Vec<String>,
}

/// AlphaMax on samples of dimension 1 to 3 (one row per point).
pub fn alphamax_samples(
    mixture: ArrayView2<f64>,
    component: ArrayView2<f64>,
    config: &AlphaMaxConfig,
) -> Result<AlphaMaxResult> {
    let grid = config.r_grid()?;
    let bins = bin_counts(mixture, component)?;
    let problem = CurveProblem::new(&bins, config.pseudocount)?;
    let curve = ll_curve(&problem, &grid, config.solver, config.warm_start, config.max_iter)?;
    let found = elbow_with(&curve.r_grid, &curve.ll, config.elbow)?;
    let mut warnings = curve.warnings.clone();
    if found.degenerate {
        warnings.push("likelihood curve never decreases; estimate set to 1".into());
    }
    Ok(AlphaMaxResult {
        estimate: found.r,
        curve,
        warnings,
    })
}

fn as_column(xs: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((xs.len(), 1), xs).expect("contiguous slice")
}

/// Maximum proportion of `C`'s distribution in `M`'s, from 1-D scores.
pub fn alphamax(mixture: &[f64], component: &[f64], config: &AlphaMaxConfig) -> Result<AlphaMaxResult> {
    alphamax_samples(as_column(mixture), as_column(component), config)
}

/// AlphaMax-N on raw samples: `α⁺ = AlphaMax(U, L)`, `β⁺ = AlphaMax(L, U)`,
/// then the correction to `(α*, β*)`.
pub fn alphamax_n_samples(
    unlabeled: ArrayView2<f64>,
    labeled: ArrayView2<f64>,
    config: &AlphaMaxConfig,
) -> Result<PriorEstimate> {
    let (a, b) = rayon::join(
        || alphamax_samples(unlabeled, labeled, config),
        || alphamax_samples(labeled, unlabeled, config),
    );
    let (a, b) = (a?, b?);
    let mut warnings: Vec<String> = a
        .warnings
        .iter()
        .map(|w| format!("AlphaMax(U,L): {w}"))
        .chain(b.warnings.iter().map(|w| format!("AlphaMax(L,U): {w}")))
        .collect();
    let (mut alpha_plus, mut beta_plus) = (a.estimate, b.estimate);
    if alpha_plus * beta_plus >= 1.0 || alpha_plus >= 1.0 || beta_plus >= 1.0 {
        warnings.push(format!(
            "alpha_plus={alpha_plus} beta_plus={beta_plus} clipped to at most {PLUS_CLIP}"
        ));
        alpha_plus = alpha_plus.min(PLUS_CLIP);
        beta_plus = beta_plus.min(PLUS_CLIP);
    }
    let (alpha_star, beta_star) = correction(alpha_plus, beta_plus)?;
    Ok(PriorEstimate {
        method: Method::AlphaMaxN,
        alpha_plus,
        beta_plus,
        alpha_star,
        beta_star,
        warnings,
        curves: vec![a.curve, b.curve],
    })
}

/// Noise-unaware AlphaMax: `α* = AlphaMax(U, L)` with `β* = 1`.
pub fn alphamax_clean_samples(
    unlabeled: ArrayView2<f64>,
    labeled: ArrayView2<f64>,
    config: &AlphaMaxConfig,
) -> Result<PriorEstimate> {
    let a = alphamax_samples(unlabeled, labeled, config)?;
    Ok(PriorEstimate {
        method: Method::AlphaMax,
        alpha_plus: a.estimate,
        beta_plus: 0.0,
        alpha_star: a.estimate,
        beta_star: 1.0,
        warnings: a.warnings,
        curves: vec![a.curve],
    })
}

fn score_columns(t: &TransformedPU) -> (Array2<f64>, Array2<f64>) {
    let col = |xs: &[f64]| Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("length matches");
    (col(&t.scores_unlabeled), col(&t.scores_labeled))
}

/// AlphaMax-N on transformed scores.
pub fn alphamax_n(transformed: &TransformedPU, config: &AlphaMaxConfig) -> Result<PriorEstimate> {
    let (u, l) = score_columns(transformed);
    alphamax_n_samples(u.view(), l.view(), config)
}

/// Plain AlphaMax on transformed scores.
pub fn alphamax_clean(transformed: &TransformedPU, config: &AlphaMaxConfig) -> Result<PriorEstimate> {
    let (u, l) = score_columns(transformed);
    alphamax_clean_samples(u.view(), l.view(), config)
}

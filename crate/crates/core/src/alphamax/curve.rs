//! Constrained likelihood maximization behind the `ll_r` curve.
//!
//! With uniform-on-bin components the reweighted densities are constant on
//! each bin `j`:
//!
//! ```text
//! m̃_j = (r ĉ_j + (1 − ω_j) v_j) / vol      c̃_j = ω_j v_j / (r vol)
//! ```
//!
//! so the log-likelihood of both samples depends only on the bin counts.
//! It is separable and concave in `ω`, which leaves a single linear
//! constraint `Σ ω_j v_j = r` coupling the bins.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::histogram::BinnedCounts;
use crate::error::{PuError, Result};
use crate::rng::child_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Exact maximizer: bisection on the multiplier of the equality
    /// constraint, each bin solved in closed-form bracketing.
    #[default]
    Dual,
    /// Diagonally scaled projected-gradient ascent with backtracking.
    ProjectedGradient,
}

/// The count-form objective for one pair of binned samples.
#[derive(Debug, Clone)]
pub struct CurveProblem {
    /// Mixture counts `m_j`.
    pub m: Vec<f64>,
    /// Component counts `c_j`.
    pub c: Vec<f64>,
    /// Mixture bin weights `v_j` (sum to one).
    pub v: Vec<f64>,
    /// Component bin masses `ĉ_j` (sum to one).
    pub c_hat: Vec<f64>,
    pub log_volume: f64,
}

impl CurveProblem {
    /// Bins where `M` is empty but `C` is not get `pseudocount` added to the
    /// mixture count when building `v`; with `pseudocount = 0` they are
    /// dropped along with their component points.
    pub fn new(bins: &BinnedCounts, pseudocount: f64) -> Result<Self> {
        if pseudocount < 0.0 || !pseudocount.is_finite() {
            return Err(PuError::InvalidParams(format!("pseudocount {pseudocount} must be >= 0")));
        }
        let mut m = Vec::with_capacity(bins.len());
        let mut c = Vec::with_capacity(bins.len());
        let mut weight = Vec::with_capacity(bins.len());
        for (&mj, &cj) in bins.mixture.iter().zip(&bins.component) {
            if mj == 0.0 && (cj == 0.0 || pseudocount == 0.0) {
                continue;
            }
            m.push(mj);
            c.push(cj);
            weight.push(if mj == 0.0 { pseudocount } else { mj });
        }
        let w_total: f64 = weight.iter().sum();
        let c_total: f64 = c.iter().sum();
        if m.is_empty() || c_total == 0.0 {
            return Err(PuError::Degenerate("mixture and component samples share no bins".into()));
        }
        Ok(Self {
            v: weight.iter().map(|w| w / w_total).collect(),
            c_hat: c.iter().map(|x| x / c_total).collect(),
            m,
            c,
            log_volume: bins.cell_volume.ln(),
        })
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    fn n_total(&self) -> (f64, f64) {
        (self.m.iter().sum(), self.c.iter().sum())
    }

    /// `Σ m_j ln m̃_j + Σ c_j ln c̃_j` in count form.
    pub fn objective(&self, r: f64, omega: &[f64]) -> f64 {
        let (n_m, n_c) = self.n_total();
        let mut ll = -n_c * r.ln() - (n_m + n_c) * self.log_volume;
        for j in 0..self.len() {
            if self.m[j] > 0.0 {
                ll += self.m[j] * (r * self.c_hat[j] + (1.0 - omega[j]) * self.v[j]).ln();
            }
            if self.c[j] > 0.0 {
                ll += self.c[j] * (omega[j] * self.v[j]).ln();
            }
        }
        ll
    }

    /// `∂/∂ω_j` of the objective for bin `j`.
    fn slope(&self, j: usize, r: f64, t: f64) -> f64 {
        let mut g = 0.0;
        if self.c[j] > 0.0 {
            g += self.c[j] / t;
        }
        if self.m[j] > 0.0 {
            g -= self.m[j] * self.v[j] / (r * self.c_hat[j] + (1.0 - t) * self.v[j]);
        }
        g
    }

    fn curvature(&self, j: usize, r: f64, t: f64) -> f64 {
        let mut h = 0.0;
        if self.c[j] > 0.0 {
            h += self.c[j] / (t * t);
        }
        if self.m[j] > 0.0 {
            let d = r * self.c_hat[j] + (1.0 - t) * self.v[j];
            h += self.m[j] * self.v[j] * self.v[j] / (d * d);
        }
        h
    }

    /// Box bounds keeping every log argument positive.
    fn bounds(&self, j: usize, r: f64) -> (f64, f64) {
        let lo = if self.c[j] > 0.0 { 1e-12 } else { 0.0 };
        let hi = if self.m[j] > 0.0 && r * self.c_hat[j] == 0.0 {
            1.0 - 1e-12
        } else {
            1.0
        };
        (lo, hi)
    }

    /// Maximizer of `f_j(t) − λ v_j t` over `t ∈ [0,1]`.
    fn bin_argmax(&self, j: usize, r: f64, lambda: f64) -> f64 {
        let target = lambda * self.v[j];
        let g = |t: f64| self.slope(j, r, t) - target;
        let (lo, hi) = self.bounds(j, r);
        if g(lo) <= 0.0 {
            return lo;
        }
        if g(hi) >= 0.0 {
            return hi;
        }
        let (mut a, mut b) = (lo, hi);
        let mut t = 0.5 * (a + b);
        for _ in 0..200 {
            let gt = g(t);
            if gt > 0.0 {
                a = t;
            } else {
                b = t;
            }
            if b - a <= 1e-15 {
                break;
            }
            let newton = t + gt / self.curvature(j, r, t);
            t = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        }
        t
    }

    /// Exact constrained maximizer for one `r`.
    pub fn solve_dual(&self, r: f64) -> Vec<f64> {
        let total = |lambda: f64| -> f64 {
            (0..self.len()).map(|j| self.v[j] * self.bin_argmax(j, r, lambda)).sum()
        };
        // Σ v_j t_j(λ) decreases in λ
        let (mut lo, mut hi) = (-1.0, 1.0);
        while total(lo) < r && lo > -1e300 {
            lo *= 4.0;
        }
        while total(hi) > r && hi < 1e300 {
            hi *= 4.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if total(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut omega: Vec<f64> = (0..self.len()).map(|j| self.bin_argmax(j, r, 0.5 * (lo + hi))).collect();
        self.repair_constraint(r, &mut omega);
        omega
    }

    /// Pushes the residual of `Σ ω_j v_j = r` onto bins with slack.
    fn repair_constraint(&self, r: f64, omega: &mut [f64]) {
        for _ in 0..self.len() {
            let resid = r - omega.iter().zip(&self.v).map(|(w, v)| w * v).sum::<f64>();
            if resid.abs() < 1e-14 {
                return;
            }
            let slack = (0..self.len())
                .filter(|&j| {
                    let (lo, hi) = self.bounds(j, r);
                    if resid > 0.0 {
                        omega[j] < hi
                    } else {
                        omega[j] > lo
                    }
                })
                .max_by(|&a, &b| self.v[a].total_cmp(&self.v[b]));
            let Some(j) = slack else { return };
            let (lo, hi) = self.bounds(j, r);
            omega[j] = (omega[j] + resid / self.v[j]).clamp(lo, hi);
        }
    }

    /// Projection onto `{lo ≤ ω ≤ hi, Σ ω_j v_j = r}` in the metric `diag(h)`.
    fn project(&self, r: f64, y: &[f64], h: &[f64]) -> Vec<f64> {
        let at = |mu: f64| -> Vec<f64> {
            (0..self.len())
                .map(|j| {
                    let (lo, hi) = self.bounds(j, r);
                    (y[j] - mu * self.v[j] / h[j]).clamp(lo, hi)
                })
                .collect()
        };
        let sum = |w: &[f64]| w.iter().zip(&self.v).map(|(a, b)| a * b).sum::<f64>();
        let (mut lo, mut hi) = (-1.0, 1.0);
        while sum(&at(lo)) < r && lo > -1e300 {
            lo *= 4.0;
        }
        while sum(&at(hi)) > r && hi < 1e300 {
            hi *= 4.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sum(&at(mid)) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut w = at(0.5 * (lo + hi));
        self.repair_constraint(r, &mut w);
        w
    }

    /// Scaled projected-gradient ascent from `start`. Returns the iterate and
    /// whether the relative improvement fell below tolerance within
    /// `max_iter` iterations.
    pub fn solve_projected_gradient(&self, r: f64, start: &[f64], max_iter: usize) -> (Vec<f64>, bool) {
        let ones = vec![1.0; self.len()];
        let mut omega = self.project(r, start, &ones);
        let mut f = self.objective(r, &omega);
        let mut step = 1.0;
        for _ in 0..max_iter {
            let grad: Vec<f64> = (0..self.len()).map(|j| self.slope(j, r, omega[j])).collect();
            let h: Vec<f64> = (0..self.len())
                .map(|j| self.curvature(j, r, omega[j]).max(1e-12))
                .collect();
            loop {
                let y: Vec<f64> = (0..self.len()).map(|j| omega[j] + step * grad[j] / h[j]).collect();
                let candidate = self.project(r, &y, &h);
                let fc = self.objective(r, &candidate);
                if fc.is_finite() && fc >= f {
                    let gain = fc - f;
                    omega = candidate;
                    f = fc;
                    step = (step * 2.0).min(1.0);
                    if gain <= 1e-13 * f.abs().max(1.0) {
                        return (omega, true);
                    }
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    return (omega, true);
                }
            }
        }
        (omega, false)
    }
}

/// `ll_r` over a grid of `r`, with the maximizing `ω` for each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodCurve {
    pub r_grid: Vec<f64>,
    pub ll: Vec<f64>,
    pub omega_per_r: Vec<Vec<f64>>,
    /// Mixture bin weights `v_j` the `ω` vectors refer to.
    pub bin_weights: Vec<f64>,
    pub converged: Vec<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LikelihoodCurve {
    /// Writes `r,ll,converged,elbow` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, elbow: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| PuError::Io(std::io::Error::other(e));
        w.write_record(["r", "ll", "converged", "elbow"]).map_err(io)?;
        let elbow = elbow.map(|e| e.to_string()).unwrap_or_default();
        for i in 0..self.r_grid.len() {
            w.write_record([
                self.r_grid[i].to_string(),
                self.ll[i].to_string(),
                self.converged[i].to_string(),
                elbow.clone(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Solves every grid point. Projected-gradient runs are warm-started from
/// the previous solution when `warm_start` is set; points that fail to
/// converge are flagged and their `ll` interpolated from converged
/// neighbours.
pub fn ll_curve(
    problem: &CurveProblem,
    r_grid: &[f64],
    solver: Solver,
    warm_start: bool,
    max_iter: usize,
) -> Result<LikelihoodCurve> {
    if r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(PuError::InvalidParams("r grid must lie strictly inside (0,1)".into()));
    }
    let mut ll = Vec::with_capacity(r_grid.len());
    let mut omegas: Vec<Vec<f64>> = Vec::with_capacity(r_grid.len());
    let mut converged = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let (omega, ok) = match solver {
            Solver::Dual => (problem.solve_dual(r), true),
            Solver::ProjectedGradient => {
                let start = match omegas.last() {
                    Some(prev) if warm_start => prev.clone(),
                    _ => vec![r; problem.len()],
                };
                problem.solve_projected_gradient(r, &start, max_iter)
            }
        };
        let value = problem.objective(r, &omega);
        converged.push(ok && value.is_finite());
        ll.push(value);
        omegas.push(omega);
    }
    let mut warnings = Vec::new();
    let good: Vec<usize> = (0..ll.len()).filter(|&i| converged[i]).collect();
    if good.is_empty() {
        return Err(PuError::EstimationFailed("no point of the likelihood curve converged".into()));
    }
    for i in 0..ll.len() {
        if converged[i] {
            continue;
        }
        warnings.push(format!("optimizer did not converge at r={:.4}; ll interpolated", r_grid[i]));
        let left = good.iter().rev().find(|&&k| k < i).copied();
        let right = good.iter().find(|&&k| k > i).copied();
        ll[i] = match (left, right) {
            (Some(a), Some(b)) => {
                let t = (r_grid[i] - r_grid[a]) / (r_grid[b] - r_grid[a]);
                ll[a] + t * (ll[b] - ll[a])
            }
            (Some(a), None) => ll[a],
            (None, Some(b)) => ll[b],
            (None, None) => unreachable!(),
        };
    }
    Ok(LikelihoodCurve {
        r_grid: r_grid.to_vec(),
        ll,
        omega_per_r: omegas,
        bin_weights: problem.v.clone(),
        converged,
        warnings,
    })
}

/// Random feasible-ish starting point for restart tests and diagnostics.
pub fn random_start(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = child_rng(seed, 0x0e9a);
    (0..len).map(|_| rng.random::<f64>()).collect()
}

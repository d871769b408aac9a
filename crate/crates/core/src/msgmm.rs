//! Multi-sample Gaussian mixture model.
//!
//! `U` and `L` are modelled as two-component Gaussian mixtures that share
//! their components `N(u₀, Σ₀)` and `N(u₁, Σ₁)` but mix them with different
//! weights (`α` for `U`, `β` for `L`). All six parameters are fitted jointly
//! by EM on the combined likelihood of both samples.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::PuDataset;
use crate::error::{PuError, Result};
use crate::estimate::{Method, PriorEstimate};
use crate::math::log_add_exp;
use crate::rng::child_rng;

/// Components whose total responsibility falls below this are degenerate.
pub const MIN_COMPONENT_MASS: f64 = 1e-8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsGmmParams {
    pub alpha: f64,
    pub beta: f64,
    pub u0: Array1<f64>,
    pub u1: Array1<f64>,
    pub sigma0: Array2<f64>,
    pub sigma1: Array2<f64>,
}

impl MsGmmParams {
    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    /// Relabels the components: `(α, β) → (1−α, 1−β)`, means and
    /// covariances exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: 1.0 - self.alpha,
            beta: 1.0 - self.beta,
            u0: self.u1.clone(),
            u1: self.u0.clone(),
            sigma0: self.sigma1.clone(),
            sigma1: self.sigma0.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.u1.len() != d || self.sigma0.dim() != (d, d) || self.sigma1.dim() != (d, d) {
            return Err(PuError::InvalidParams("inconsistent parameter dimensions".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return Err(PuError::InvalidParams(format!(
                "mixing weights ({}, {}) outside [0,1]",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Posterior probabilities of the positive component for each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Responsibilities {
    pub w_u: Vec<f64>,
    pub w_l: Vec<f64>,
}

/// A Gaussian prepared for repeated log-density evaluation.
struct PreparedGaussian {
    mean: Vec<f64>,
    /// Row-major lower Cholesky factor of the covariance.
    chol: Vec<f64>,
    log_norm: f64,
}

impl PreparedGaussian {
    fn new(mean: &Array1<f64>, cov: &Array2<f64>) -> Result<Self> {
        let d = mean.len();
        let m = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
        let chol = m
            .cholesky()
            .ok_or_else(|| PuError::DegenerateComponent("covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(Self {
            mean: mean.to_vec(),
            chol: (0..d * d).map(|k| l[(k / d, k % d)]).collect(),
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
        })
    }

    fn log_pdf(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L z = x − mean
        let mut quad = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * scratch[j];
            }
            let z = s / self.chol[i * d + i];
            scratch[i] = z;
            quad += z * z;
        }
        self.log_norm - 0.5 * quad
    }
}

fn log_weight(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Per-point `(ln φ₀, ln φ₁)` for one sample.
fn component_log_pdfs(
    x: ArrayView2<f64>,
    g0: &PreparedGaussian,
    g1: &PreparedGaussian,
) -> Vec<(f64, f64)> {
    let mut scratch = vec![0.0; x.ncols()];
    let mut row_buf = vec![0.0; x.ncols()];
    x.rows()
        .into_iter()
        .map(|row| {
            let r = match row.as_slice() {
                Some(s) => s,
                None => {
                    row_buf.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
                    &row_buf
                }
            };
            (g0.log_pdf(r, &mut scratch), g1.log_pdf(r, &mut scratch))
        })
        .collect()
}

fn check_dims(data: &PuDataset, params: &MsGmmParams) -> Result<()> {
    params.validate()?;
    if data.dim() != params.dim() {
        return Err(PuError::invalid(format!(
            "data has {} columns, parameters {}",
            data.dim(),
            params.dim()
        )));
    }
    Ok(())
}

/// Returns (responsibilities, log-likelihood) of one sample under weight `p`.
fn sample_posteriors(pdfs: &[(f64, f64)], p: f64) -> Result<(Vec<f64>, f64)> {
    let (lp1, lp0) = (log_weight(p), log_weight(1.0 - p));
    let mut ll = 0.0;
    let mut w = Vec::with_capacity(pdfs.len());
    for &(l0, l1) in pdfs {
        let a = lp1 + l1;
        let b = lp0 + l0;
        let total = log_add_exp(a, b);
        if !total.is_finite() {
            return Err(PuError::EstimationFailed(
                "both component densities vanish at a point".into(),
            ));
        }
        ll += total;
        w.push((a - total).exp());
    }
    Ok((w, ll))
}

fn e_step_with_ll(data: &PuDataset, params: &MsGmmParams) -> Result<(Responsibilities, f64)> {
    check_dims(data, params)?;
    let g0 = PreparedGaussian::new(&params.u0, &params.sigma0)?;
    let g1 = PreparedGaussian::new(&params.u1, &params.sigma1)?;
    let (w_u, ll_u) = sample_posteriors(&component_log_pdfs(data.unlabeled.view(), &g0, &g1), params.alpha)?;
    let (w_l, ll_l) = sample_posteriors(&component_log_pdfs(data.labeled.view(), &g0, &g1), params.beta)?;
    Ok((Responsibilities { w_u, w_l }, ll_u + ll_l))
}

/// Posterior probability of the positive component for every point of `U`
/// and `L`, computed in log space.
pub fn e_step(data: &PuDataset, params: &MsGmmParams) -> Result<Responsibilities> {
    e_step_with_ll(data, params).map(|(r, _)| r)
}

/// Combined log-likelihood `Σ_U ln(αφ₁ + (1−α)φ₀) + Σ_L ln(βφ₁ + (1−β)φ₀)`.
pub fn log_likelihood(data: &PuDataset, params: &MsGmmParams) -> Result<f64> {
    e_step_with_ll(data, params).map(|(_, ll)| ll)
}

/// M-step with the default covariance ridge.
pub fn m_step(data: &PuDataset, resp: &Responsibilities) -> Result<MsGmmParams> {
    m_step_with_ridge(data, resp, MsGmmConfig::default().ridge)
}

/// Closed-form maximizer of the expected complete-data log-likelihood.
///
/// Means and covariances pool both samples; each covariance gets
/// `ridge · trace(Σ)/d` added to its diagonal (`ridge = 0` disables it).
/// With an empty `L` the updates are those of a single two-component GMM
/// on `U`, and `β` is reported as 0.
pub fn m_step_with_ridge(data: &PuDataset, resp: &Responsibilities, ridge: f64) -> Result<MsGmmParams> {
    if resp.w_u.len() != data.n_unlabeled() || resp.w_l.len() != data.n_labeled() {
        return Err(PuError::invalid("responsibilities do not match sample sizes"));
    }
    if data.n_unlabeled() == 0 {
        return Err(PuError::invalid("unlabeled sample is empty"));
    }
    let d = data.dim();
    let alpha = resp.w_u.iter().sum::<f64>() / data.n_unlabeled() as f64;
    let beta = if data.n_labeled() == 0 {
        0.0
    } else {
        resp.w_l.iter().sum::<f64>() / data.n_labeled() as f64
    };

    let points = || {
        data.unlabeled
            .rows()
            .into_iter()
            .zip(resp.w_u.iter())
            .chain(data.labeled.rows().into_iter().zip(resp.w_l.iter()))
    };

    let (mut n1, mut n0) = (0.0, 0.0);
    let mut s1 = Array1::<f64>::zeros(d);
    let mut s0 = Array1::<f64>::zeros(d);
    for (x, &w) in points() {
        n1 += w;
        n0 += 1.0 - w;
        s1.scaled_add(w, &x);
        s0.scaled_add(1.0 - w, &x);
    }
    if n1 < MIN_COMPONENT_MASS || n0 < MIN_COMPONENT_MASS {
        return Err(PuError::DegenerateComponent(format!(
            "component responsibility mass too small (positive {n1:.3e}, negative {n0:.3e})"
        )));
    }
    let u1 = s1 / n1;
    let u0 = s0 / n0;

    let mut c1 = Array2::<f64>::zeros((d, d));
    let mut c0 = Array2::<f64>::zeros((d, d));
    let mut diff1 = vec![0.0; d];
    let mut diff0 = vec![0.0; d];
    for (x, &w) in points() {
        for k in 0..d {
            diff1[k] = x[k] - u1[k];
            diff0[k] = x[k] - u0[k];
        }
        for a in 0..d {
            for b in 0..=a {
                c1[[a, b]] += w * diff1[a] * diff1[b];
                c0[[a, b]] += (1.0 - w) * diff0[a] * diff0[b];
            }
        }
    }
    let finish = |mut c: Array2<f64>, mass: f64| {
        for a in 0..d {
            for b in 0..=a {
                let v = c[[a, b]] / mass;
                c[[a, b]] = v;
                c[[b, a]] = v;
            }
        }
        if ridge > 0.0 {
            let trace: f64 = (0..d).map(|i| c[[i, i]]).sum();
            let eps = ridge * (trace / d as f64).max(f64::MIN_POSITIVE);
            for i in 0..d {
                c[[i, i]] += eps;
            }
        }
        c
    };
    Ok(MsGmmParams {
        alpha,
        beta,
        u0,
        u1,
        sigma0: finish(c0, n0),
        sigma1: finish(c1, n1),
    })
}

fn default_restarts() -> usize {
    10
}
fn default_max_iter() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-7
}
fn default_ridge() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsGmmConfig {
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop when the log-likelihood gain falls below `tol · |ll|`.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

impl Default for MsGmmConfig {
    fn default() -> Self {
        Self {
            restarts: default_restarts(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            ridge: default_ridge(),
        }
    }
}

/// One EM run from a fixed starting point.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub params: MsGmmParams,
    pub log_likelihood: f64,
    /// Log-likelihood of the starting point followed by one entry per
    /// iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn run_em(data: &PuDataset, init: MsGmmParams, config: &MsGmmConfig) -> Result<EmRun> {
    let mut params = init;
    let (mut resp, mut ll) = e_step_with_ll(data, &params)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let next = m_step_with_ridge(data, &resp, config.ridge)?;
        let (next_resp, next_ll) = e_step_with_ll(data, &next)?;
        trace.push(next_ll);
        let gain = next_ll - ll;
        params = next;
        resp = next_resp;
        ll = next_ll;
        if gain.abs() < config.tol * ll.abs() {
            converged = true;
            break;
        }
    }
    Ok(EmRun {
        params,
        log_likelihood: ll,
        trace,
        iterations,
        converged,
    })
}

fn pooled_covariance(pooled: &Array2<f64>) -> Array2<f64> {
    let n = pooled.nrows() as f64;
    let mean = pooled.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let centered = pooled - &mean;
    let mut cov = centered.t().dot(&centered) / (n - 1.0).max(1.0);
    let d = cov.nrows();
    let trace: f64 = (0..d).map(|i| cov[[i, i]]).sum();
    for i in 0..d {
        cov[[i, i]] += 1e-6 * (trace / d as f64).max(f64::MIN_POSITIVE);
    }
    cov
}

/// Starting point for restart `restart`: two seeds drawn k-means++ style
/// (the second with probability proportional to squared distance from the
/// first), pooled covariance for both components, `(α, β) = (0.3, 0.7)`.
pub fn initial_params(data: &PuDataset, restart: usize, seed: u64) -> MsGmmParams {
    let pooled = sorted_rows(&data.pooled());
    let n = pooled.nrows();
    let mut rng = child_rng(seed, 0x6a3 + restart as u64);
    let first = pooled.row(rng.random_range(0..n)).to_owned();
    let dist: Vec<f64> = pooled
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(first.iter()).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    let total: f64 = dist.iter().sum();
    let second = if total > 0.0 {
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, d) in dist.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        pooled.row(pick).to_owned()
    } else {
        first.clone()
    };
    // the seed lying further along mean(L) − mean(U) starts as the positive component
    let mean_u = data.unlabeled.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let mean_l = data.labeled.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let dir = &mean_l - &mean_u;
    let (u0, u1) = if first.dot(&dir) > second.dot(&dir) {
        (second, first)
    } else {
        (first, second)
    };
    let cov = pooled_covariance(&pooled);
    MsGmmParams {
        alpha: 0.3,
        beta: 0.7,
        u0,
        u1,
        sigma0: cov.clone(),
        sigma1: cov,
    }
}

/// Rows in lexicographic order, so seeding ignores the input row order.
fn sorted_rows(points: &Array2<f64>) -> Array2<f64> {
    let mut rows: Vec<_> = points.rows().into_iter().collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Array2::zeros(points.raw_dim());
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&src);
    }
    out
}

#[derive(Debug, Clone)]
pub struct MsGmmFit {
    pub params: MsGmmParams,
    pub estimate: PriorEstimate,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failed_restarts: usize,
}

/// Best-of-restarts EM. The fitted components are labelled so that `α ≤ β`.
pub fn fit(data: &PuDataset, config: &MsGmmConfig, seed: u64) -> Result<MsGmmFit> {
    data.validate()?;
    if data.n_unlabeled() < 2 || data.n_labeled() < 2 || data.dim() == 0 {
        return Err(PuError::invalid("MSGMM needs |U| >= 2, |L| >= 2 and d >= 1"));
    }
    if config.restarts == 0 {
        return Err(PuError::Config("restarts must be at least 1".into()));
    }
    let runs: Vec<Result<EmRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_em(data, initial_params(data, r, seed), config))
        .collect();
    let mut failures = Vec::new();
    let mut best: Option<EmRun> = None;
    for run in runs {
        match run {
            Ok(run) if run.log_likelihood.is_finite() => {
                if best.as_ref().is_none_or(|b| run.log_likelihood > b.log_likelihood) {
                    best = Some(run);
                }
            }
            Ok(_) => failures.push("non-finite log-likelihood".to_string()),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let best = best.ok_or_else(|| {
        PuError::EstimationFailed(format!("all {} EM restarts failed: {}", config.restarts, failures.join("; ")))
    })?;
    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push(format!("EM stopped at max_iter={} before converging", config.max_iter));
    }
    let params = if best.params.alpha > best.params.beta {
        best.params.swapped()
    } else {
        best.params
    };
    let (alpha, beta) = (params.alpha, params.beta);
    let estimate = PriorEstimate {
        method: Method::Msgmm,
        alpha_plus: if beta > 0.0 { alpha / beta } else { 0.0 },
        beta_plus: if alpha < 1.0 { (1.0 - beta) / (1.0 - alpha) } else { 0.0 },
        alpha_star: alpha,
        beta_star: beta,
        warnings,
        curves: Vec::new(),
    };
    Ok(MsGmmFit {
        params,
        estimate,
        log_likelihood: best.log_likelihood,
        iterations: best.iterations,
        converged: best.converged,
        failed_restarts: failures.len(),
    })
}

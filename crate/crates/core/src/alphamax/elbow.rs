use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

/// How the knot of an `ll_r` curve is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElbowRule {
    /// Continuous two-segment linear fit over the whole grid.
    Hinge,
    /// Hinge whose right segment is `b·(r−k)^p`, `p ∈ {1, 1.5, 2}`, fitted
    /// to the likelihood drop over the points whose drop is at most a
    /// quarter of the total.
    #[default]
    PowerHinge,
}

const POWERS: [f64; 3] = [1.0, 1.5, 2.0];
const DROP_FRACTION: f64 = 0.25;

/// Location of the elbow of an `ll_r` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Elbow {
    pub r: f64,
    /// Set when the curve never decreases; `r` is then 1.
    pub degenerate: bool,
    pub sse: f64,
}

/// Fits a continuous two-segment linear model with its knot at each grid
/// point in turn and returns the knot with the smallest squared error.
/// Ties go to the largest `r`. A curve that never decreases has no elbow
/// and yields `r = 1`.
pub fn elbow(r: &[f64], ll: &[f64]) -> Result<Elbow> {
    elbow_with(r, ll, ElbowRule::Hinge)
}

fn finite_points(r: &[f64], ll: &[f64]) -> Result<Vec<(f64, f64)>> {
    if r.len() != ll.len() {
        return Err(PuError::invalid("r grid and ll differ in length"));
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(ll)
        .filter(|(_, y)| y.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.len() < 5 {
        return Err(PuError::EstimationFailed(format!(
            "elbow detection needs at least 5 finite points, got {}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Elbow of the curve under `rule`. Non-finite points are skipped; fewer
/// than five finite points is an error.
pub fn elbow_with(r: &[f64], ll: &[f64], rule: ElbowRule) -> Result<Elbow> {
    let pts = finite_points(r, ll)?;
    let scale = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(1.0);
    if pts.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9 * scale) {
        return Ok(Elbow {
            r: 1.0,
            degenerate: true,
            sse: 0.0,
        });
    }
    match rule {
        ElbowRule::Hinge => Ok(hinge_fit(&pts)),
        ElbowRule::PowerHinge => Ok(power_fit(&pts)),
    }
}

fn hinge_fit(pts: &[(f64, f64)]) -> Elbow {
    // centre the responses so the squared errors are not swamped by |ll|
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sst: f64 = pts.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let tie = 1e-12 * sst.max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, f64)> = None;
    for &(knot, _) in pts {
        keep_best(&mut best, knot, hinge_sse(pts, knot, y_mean), tie);
    }
    let (r, sse) = best.expect("at least one knot");
    Elbow {
        r,
        degenerate: false,
        sse,
    }
}

/// Later knots win ties.
fn keep_best(best: &mut Option<(f64, f64)>, knot: f64, sse: f64, tie: f64) {
    match *best {
        Some((_, b)) if sse > b + tie => {}
        Some((_, b)) if sse >= b - tie => *best = Some((knot, sse.min(b))),
        _ => *best = Some((knot, sse)),
    }
}

fn power_fit(pts: &[(f64, f64)]) -> Elbow {
    let top = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let drop: Vec<(f64, f64)> = pts.iter().map(|&(r, y)| (r, top - y)).collect();
    let total = drop.iter().map(|p| p.1).fold(0.0, f64::max);
    let n = drop
        .iter()
        .position(|p| p.1 > DROP_FRACTION * total)
        .unwrap_or(drop.len())
        .max(5);
    let window = &drop[..n];
    let mean = window.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sst: f64 = window.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let tie = 1e-12 * sst.max(f64::MIN_POSITIVE);
    let mut best = None;
    for &(knot, _) in window {
        for p in POWERS {
            keep_best(&mut best, knot, power_sse(window, knot, p), tie);
        }
    }
    let (r, sse) = best.expect("at least one knot");
    Elbow {
        r,
        degenerate: false,
        sse,
    }
}

/// Residual sum of squares of `d ~ a + s·min(r−k, 0) + b·max(r−k, 0)^p`.
fn power_sse(pts: &[(f64, f64)], knot: f64, p: f64) -> f64 {
    let basis = |r: f64| Vector3::new(1.0, (r - knot).min(0.0), (r - knot).max(0.0).powf(p));
    least_squares_sse(pts, basis, 0.0)
}

fn least_squares_sse(pts: &[(f64, f64)], basis: impl Fn(f64) -> Vector3<f64>, y_shift: f64) -> f64 {
    let mut xtx = Matrix3::zeros();
    let mut xty = Vector3::zeros();
    for &(r, y) in pts {
        let x = basis(r);
        xtx += x * x.transpose();
        xty += x * (y - y_shift);
    }
    // a knot at either end leaves one basis column identically zero
    let coef = xtx
        .svd(true, true)
        .solve(&xty, 1e-12 * xtx.norm())
        .unwrap_or_else(|_| Vector3::zeros());
    pts.iter()
        .map(|&(r, y)| (y - y_shift - basis(r).dot(&coef)).powi(2))
        .sum()
}

/// Residual sum of squares of `y ~ a + b·min(r−k, 0) + c·max(r−k, 0)`.
fn hinge_sse(pts: &[(f64, f64)], knot: f64, y_mean: f64) -> f64 {
    let basis = |r: f64| Vector3::new(1.0, (r - knot).min(0.0), (r - knot).max(0.0));
    least_squares_sse(pts, basis, y_mean)
}

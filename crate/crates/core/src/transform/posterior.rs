use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};

/// Inputs to the posterior correction of a labeled-vs-unlabeled score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Estimate of `p(S=0)/p(S=1)`, by default `|U|/|L|`.
    pub ratio: f64,
}

impl PosteriorParams {
    pub fn new(alpha_star: f64, beta_star: f64, ratio: f64) -> Result<Self> {
        let p = Self {
            alpha_star,
            beta_star,
            ratio,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha_star && self.alpha_star < self.beta_star && self.beta_star <= 1.0) {
            return Err(PuError::InvalidParams(format!(
                "need 0 <= alpha_star < beta_star <= 1, got ({}, {})",
                self.alpha_star, self.beta_star
            )));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(PuError::InvalidParams(format!("ratio must be positive, got {}", self.ratio)));
        }
        Ok(())
    }
}

/// True-class posterior `p(Y=1 | x)` from the labeled-vs-unlabeled score
/// `τ = p(S=1 | x)`:
///
/// ```text
/// α*(1−α*)/(β*−α*) · (ratio·τ/(1−τ) − (1−β*)/(1−α*))
/// ```
///
/// clamped to `[0, 1]`. `τ = 1` maps to 1.
pub fn posterior(tau: f64, params: &PosteriorParams) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(PuError::invalid(format!("score {tau} outside [0,1]")));
    }
    if tau == 1.0 {
        return Ok(1.0);
    }
    let PosteriorParams {
        alpha_star: a,
        beta_star: b,
        ratio,
    } = *params;
    // α* = 1 is excluded by α* < β* ≤ 1
    let raw = a * (1.0 - a) / (b - a) * (ratio * tau / (1.0 - tau) - (1.0 - b) / (1.0 - a));
    Ok(raw.clamp(0.0, 1.0))
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alphamax::LikelihoodCurve;
use crate::error::PuError;

/// Which estimator produced a [`PriorEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "alphamax")]
    AlphaMax,
    #[serde(rename = "alphamax-n")]
    AlphaMaxN,
    #[serde(rename = "msgmm")]
    Msgmm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Msgmm, Method::AlphaMaxN, Method::AlphaMax];

    pub fn name(&self) -> &'static str {
        match self {
            Method::AlphaMax => "alphamax",
            Method::AlphaMaxN => "alphamax-n",
            Method::Msgmm => "msgmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PuError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PuError::Config(format!("unknown method {s:?}")))
    }
}

/// Estimated maximum proportions `(α⁺, β⁺)` and canonical priors `(α*, β*)`.
///
/// For AlphaMax-N the starred values are the corrected pair computed from
/// the plus values. MSGMM estimates `(α*, β*)` directly and reports the
/// implied plus values. Plain AlphaMax assumes clean labels (`β* = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub method: Method,
    pub alpha_plus: f64,
    pub beta_plus: f64,
    pub alpha_star: f64,
    pub beta_star: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Likelihood curves behind an AlphaMax estimate, in-memory only.
    #[serde(skip)]
    pub curves: Vec<LikelihoodCurve>,
}

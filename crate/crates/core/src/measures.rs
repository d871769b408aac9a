//! Exact identifiability algebra on finite discrete measures.
//!
//! Events are realized as subsets of atoms, so every quantity here (maximum
//! component proportion, the two-component decomposition, the max-canonical
//! form) is computed exactly up to floating point. The sampling estimators
//! are tested against these functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::rng::rng_from_seed;

/// Atom masses at or above this value count as non-negative.
pub const FEASIBILITY_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;
/// Largest support for which subset enumeration is allowed.
pub const MAX_ENUMERATION_ATOMS: usize = 20;

/// A probability vector over a finite set of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(PuError::invalid("measure needs at least one atom"));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(PuError::invalid(format!("atom mass {m} is not a finite non-negative number")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(PuError::invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { masses })
    }

    /// Normalizes non-negative weights into a measure.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(PuError::invalid("weights must be non-negative with positive total"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Builds `a·x + b·y` atomwise. The caller guarantees a valid result.
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let masses = x
            .masses
            .iter()
            .zip(&y.masses)
            .map(|(p, q)| a * p + b * q)
            .collect();
        Self { masses }
    }

    /// Mixture `weight·first + (1 − weight)·second`.
    pub fn mixture(weight: f64, first: &Self, second: &Self) -> Result<Self> {
        check_same_support(first, second)?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(PuError::invalid(format!("mixing weight {weight} outside [0,1]")));
        }
        Ok(Self::combine(weight, first, 1.0 - weight, second))
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Clamps round-off negatives (≥ −tol) to zero and renormalizes.
    fn from_raw(raw: Vec<f64>) -> Option<Self> {
        if raw.iter().any(|m| *m < -FEASIBILITY_TOL || !m.is_finite()) {
            return None;
        }
        let clamped: Vec<f64> = raw.into_iter().map(|m| m.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(Self {
            masses: clamped.into_iter().map(|m| m / total).collect(),
        })
    }
}

/// Mixing proportions of the positive component in the unlabeled (`alpha`)
/// and labeled (`beta`) distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorPair {
    pub alpha: f64,
    pub beta: f64,
}

impl PriorPair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0 <= alpha && alpha < beta && beta <= 1.0) {
            return Err(PuError::InvalidParams(format!(
                "need 0 <= alpha < beta <= 1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

/// The unique max-canonical decomposition of a pair of mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub alpha_plus: f64,
    pub beta_plus: f64,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub mu0_star: DiscreteMeasure,
    pub mu1_star: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Feasible {
        mu0: DiscreteMeasure,
        mu1: DiscreteMeasure,
    },
    Infeasible,
}

impl Decomposition {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decomposition::Feasible { .. })
    }
}

fn check_same_support(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
    if a.len() != b.len() {
        return Err(PuError::invalid(format!(
            "measures have different support sizes ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Maximum proportion with which `component` can appear in `mixture`.
///
/// The infimum of `mixture(A)/component(A)` over events is attained on a
/// single atom, so this is the smallest atom ratio, clipped to `[0, 1]`.
pub fn amax(mixture: &DiscreteMeasure, component: &DiscreteMeasure) -> Result<f64> {
    check_same_support(mixture, component)?;
    if component.masses.iter().all(|m| *m == 0.0) {
        return Err(PuError::invalid("component measure has no positive atom"));
    }
    let value = mixture
        .masses
        .iter()
        .zip(&component.masses)
        .filter(|(_, c)| **c > 0.0)
        .map(|(m, c)| m / c)
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0);
    #[cfg(debug_assertions)]
    if mixture.len() <= 10 {
        let by_subsets = amax_subset_infimum(mixture, component)?;
        debug_assert!(
            (by_subsets - value).abs() <= 1e-12,
            "atom minimum {value} disagrees with subset infimum {by_subsets}"
        );
    }
    Ok(value)
}

/// Brute-force `amax`: enumerates all `2^n − 1` non-empty events.
pub fn amax_subset_infimum(mixture: &DiscreteMeasure, component: &DiscreteMeasure) -> Result<f64> {
    check_same_support(mixture, component)?;
    let n = mixture.len();
    if n > MAX_ENUMERATION_ATOMS {
        return Err(PuError::invalid(format!(
            "subset enumeration limited to {MAX_ENUMERATION_ATOMS} atoms, got {n}"
        )));
    }
    let mut best = f64::INFINITY;
    for subset in 1u32..(1u32 << n) {
        let (mut m, mut c) = (0.0, 0.0);
        for atom in 0..n {
            if subset & (1 << atom) != 0 {
                m += mixture.masses[atom];
                c += component.masses[atom];
            }
        }
        if c > 0.0 {
            best = best.min(m / c);
        }
    }
    if best.is_infinite() {
        return Err(PuError::invalid("component measure has no positive atom"));
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Recovers the components `(μ0, μ1)` implied by mixing proportions
/// `(α, β)`, or reports that no valid pair of measures exists.
pub fn decompose(mu: &DiscreteMeasure, nu: &DiscreteMeasure, pair: PriorPair) -> Result<Decomposition> {
    check_same_support(mu, nu)?;
    let PriorPair { alpha, beta } = pair;
    let gap = beta - alpha;
    if gap == 0.0 {
        return Err(PuError::invalid("alpha equals beta; components are not determined"));
    }
    let mu0: Vec<f64> = mu
        .masses
        .iter()
        .zip(&nu.masses)
        .map(|(m, n)| (beta * m - alpha * n) / gap)
        .collect();
    let mu1: Vec<f64> = mu
        .masses
        .iter()
        .zip(&nu.masses)
        .map(|(m, n)| ((1.0 - alpha) * n - (1.0 - beta) * m) / gap)
        .collect();
    Ok(match (DiscreteMeasure::from_raw(mu0), DiscreteMeasure::from_raw(mu1)) {
        (Some(mu0), Some(mu1)) => Decomposition::Feasible { mu0, mu1 },
        _ => Decomposition::Infeasible,
    })
}

/// Maps the maximum proportions `(α⁺, β⁺)` to the canonical `(α*, β*)`.
pub fn correction(alpha_plus: f64, beta_plus: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&alpha_plus) || !(0.0..1.0).contains(&beta_plus) {
        return Err(PuError::invalid(format!(
            "alpha_plus={alpha_plus} and beta_plus={beta_plus} must lie in [0,1)"
        )));
    }
    let denom = 1.0 - alpha_plus * beta_plus;
    if denom <= 0.0 {
        return Err(PuError::invalid("alpha_plus * beta_plus must be below 1"));
    }
    let beta_star = (1.0 - beta_plus) / denom;
    Ok((alpha_plus * beta_star, beta_star))
}

pub fn canonical(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<CanonicalForm> {
    check_same_support(mu, nu)?;
    let alpha_plus = amax(mu, nu)?;
    let beta_plus = amax(nu, mu)?;
    if alpha_plus >= 1.0 || beta_plus >= 1.0 {
        return Err(PuError::invalid("unlabeled and labeled measures are identical"));
    }
    let (alpha_star, beta_star) = correction(alpha_plus, beta_plus)?;
    let mu0_star = DiscreteMeasure::combine(
        1.0 / (1.0 - alpha_plus),
        mu,
        -alpha_plus / (1.0 - alpha_plus),
        nu,
    );
    let mu1_star = DiscreteMeasure::combine(
        1.0 / (1.0 - beta_plus),
        nu,
        -beta_plus / (1.0 - beta_plus),
        mu,
    );
    let mu0_star = DiscreteMeasure::from_raw(mu0_star.masses)
        .ok_or_else(|| PuError::invalid("canonical negative component is not a measure"))?;
    let mu1_star = DiscreteMeasure::from_raw(mu1_star.masses)
        .ok_or_else(|| PuError::invalid("canonical positive component is not a measure"))?;
    Ok(CanonicalForm {
        alpha_plus,
        beta_plus,
        alpha_star,
        beta_star,
        mu0_star,
        mu1_star,
    })
}

// ---------------------------------------------------------------------------
// Randomized property suite (shared by the test suite and `oracle-check`).

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        self.max_error = self.max_error.max(error);
        if !(error <= self.tolerance) {
            self.failures += 1;
        }
    }

    fn record_bool(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 });
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_atoms: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

fn random_measure(rng: &mut impl Rng, n: usize, zero_prob: f64) -> DiscreteMeasure {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(zero_prob) { 0.0 } else { rng.random::<f64>() })
            .collect();
        if let Ok(m) = DiscreteMeasure::from_weights(&w) {
            return m;
        }
    }
}

/// A mutually irreducible pair: atom 0 carries only `μ0`, atom 1 only `μ1`.
fn random_irreducible_pair(rng: &mut impl Rng, n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut w0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut w1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    w0[0] = 0.05 + rng.random::<f64>();
    w1[0] = 0.0;
    w0[1] = 0.0;
    w1[1] = 0.05 + rng.random::<f64>();
    for i in 2..n {
        if rng.random_bool(0.2) {
            w0[i] = 0.0;
        }
        if rng.random_bool(0.2) {
            w1[i] = 0.0;
        }
    }
    (
        DiscreteMeasure::from_weights(&w0).expect("positive weights"),
        DiscreteMeasure::from_weights(&w1).expect("positive weights"),
    )
}

fn random_pair_params(rng: &mut impl Rng) -> PriorPair {
    let alpha: f64 = rng.random_range(0.0..0.9);
    let beta = rng.random_range((alpha + 0.05).min(1.0)..=1.0);
    PriorPair { alpha, beta }
}

/// Runs the identifiability property suite on `trials` random constructions
/// with supports of 2..=`max_atoms` atoms.
pub fn run_oracle_suite(max_atoms: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    if !(2..=MAX_ENUMERATION_ATOMS).contains(&max_atoms) {
        return Err(PuError::invalid(format!(
            "atoms must be in 2..={MAX_ENUMERATION_ATOMS}, got {max_atoms}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut subset = CheckOutcome::new("amax_atom_min_equals_subset_infimum", 1e-12);
    let mut round_trip = CheckOutcome::new("canonical_round_trip", 1e-8);
    let mut inverse = CheckOutcome::new("correction_inverse_identities", 1e-12);
    let mut boundary = CheckOutcome::new("decompose_feasibility_boundary", 0.0);
    let mut witness = CheckOutcome::new("unidentifiability_witness", 0.0);

    for _ in 0..trials {
        let n = rng.random_range(2..=max_atoms);

        // (a) atom minimum vs exhaustive events
        let lambda = random_measure(&mut rng, n, 0.2);
        let lambda1 = random_measure(&mut rng, n, 0.2);
        let by_atoms = amax(&lambda, &lambda1)?;
        let by_subsets = amax_subset_infimum(&lambda, &lambda1)?;
        subset.record((by_atoms - by_subsets).abs());

        // (b) canonical recovers irreducible generators
        let (mu0, mu1) = random_irreducible_pair(&mut rng, n);
        let pair = random_pair_params(&mut rng);
        let mu = DiscreteMeasure::mixture(pair.alpha, &mu1, &mu0)?;
        let nu = DiscreteMeasure::mixture(pair.beta, &mu1, &mu0)?;
        let form = canonical(&mu, &nu)?;
        let err = (form.alpha_star - pair.alpha)
            .abs()
            .max((form.beta_star - pair.beta).abs())
            .max(form.mu1_star.max_abs_diff(&mu1))
            .max(if pair.alpha < 1.0 { form.mu0_star.max_abs_diff(&mu0) } else { 0.0 });
        round_trip.record(err);

        // (c) correction inverse identities
        let ap = rng.random_range(0.0..0.999);
        let bp = rng.random_range(0.0..0.999);
        let (a, b) = correction(ap, bp)?;
        let err = (a / b - ap).abs().max(((1.0 - b) / (1.0 - a) - bp).abs());
        inverse.record(if a < b { err } else { f64::INFINITY });

        // (d) feasibility boundary on a generic pair of mixtures
        let g0 = random_measure(&mut rng, n, 0.2);
        let g1 = random_measure(&mut rng, n, 0.2);
        if g0 != g1 {
            let gp = random_pair_params(&mut rng);
            let gmu = DiscreteMeasure::mixture(gp.alpha, &g1, &g0)?;
            let gnu = DiscreteMeasure::mixture(gp.beta, &g1, &g0)?;
            let a_plus = amax(&gmu, &gnu)?;
            let b_plus = amax(&gnu, &gmu)?;
            if a_plus < 1.0 {
                for _ in 0..8 {
                    let probe = random_pair_params(&mut rng);
                    let lhs_a = probe.alpha / probe.beta - a_plus;
                    let lhs_b = if probe.alpha < 1.0 {
                        (1.0 - probe.beta) / (1.0 - probe.alpha) - b_plus
                    } else {
                        0.0
                    };
                    if lhs_a.abs() < 1e-9 || lhs_b.abs() < 1e-9 {
                        continue;
                    }
                    let predicted = lhs_a < 0.0 && lhs_b < 0.0;
                    let actual = decompose(&gmu, &gnu, probe)?.is_feasible();
                    boundary.record_bool(predicted == actual);
                }
                // (e) more than one feasible pair when both proportions are positive
                if a_plus > 1e-6 && b_plus > 1e-6 {
                    let t = rng.random_range(0.05..=1.0);
                    let clean = decompose(&gmu, &gnu, PriorPair { alpha: 0.0, beta: 1.0 })?;
                    let other = decompose(&gmu, &gnu, PriorPair { alpha: a_plus * t, beta: 1.0 })?;
                    witness.record_bool(clean.is_feasible() && other.is_feasible());
                }
            }
        }
    }
    Ok(OracleReport {
        max_atoms,
        trials,
        seed,
        checks: vec![subset, round_trip, inverse, boundary, witness],
    })
}

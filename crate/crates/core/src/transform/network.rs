use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::sigmoid;

/// Two-layer feed-forward network: `d` inputs, one sigmoid hidden layer,
/// one sigmoid output.
///
/// Parameters are stored flat as `[W₁ (hidden×d, row-major), b₁, w₂, b₂]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn n_params(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + 2 * hidden + 1
    }

    /// Weights drawn uniformly from `[−range, range]`.
    pub fn random<R: Rng>(inputs: usize, hidden: usize, range: f64, rng: &mut R) -> Self {
        let params = (0..Self::n_params(inputs, hidden))
            .map(|_| rng.random_range(-range..=range))
            .collect();
        Self { inputs, hidden, params }
    }

    fn b1_offset(&self) -> usize {
        self.hidden * self.inputs
    }

    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }

    fn b2_offset(&self) -> usize {
        self.w2_offset() + self.hidden
    }

    /// Output logit, filling `act` with the hidden activations.
    fn logit_with(&self, x: &[f64], act: &mut [f64]) -> f64 {
        let (d, h) = (self.inputs, self.hidden);
        let p = &self.params;
        let mut z = p[self.b2_offset()];
        for k in 0..h {
            let row = &p[k * d..(k + 1) * d];
            let pre = p[self.b1_offset() + k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            act[k] = sigmoid(pre);
            z += p[self.w2_offset() + k] * act[k];
        }
        z
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        sigmoid(self.logit_with(x, &mut act))
    }

    /// Mean cross-entropy of the batch; `targets` are 0/1.
    pub fn loss(&self, xs: &[&[f64]], targets: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        let total: f64 = xs
            .iter()
            .zip(targets)
            .map(|(x, &y)| cross_entropy(self.logit_with(x, &mut act), y))
            .sum();
        total / xs.len() as f64
    }

    /// Mean cross-entropy and its gradient (accumulated into `grad`, which
    /// is overwritten).
    pub fn loss_and_grad(&self, xs: &[&[f64]], targets: &[f64], grad: &mut [f64]) -> f64 {
        let (d, h) = (self.inputs, self.hidden);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut act = vec![0.0; h];
        let mut loss = 0.0;
        let (b1, w2, b2) = (self.b1_offset(), self.w2_offset(), self.b2_offset());
        for (x, &y) in xs.iter().zip(targets) {
            let z = self.logit_with(x, &mut act);
            loss += cross_entropy(z, y);
            let dz = sigmoid(z) - y;
            grad[b2] += dz;
            for k in 0..h {
                grad[w2 + k] += dz * act[k];
                let dpre = dz * self.params[w2 + k] * act[k] * (1.0 - act[k]);
                grad[b1 + k] += dpre;
                for (g, v) in grad[k * d..(k + 1) * d].iter_mut().zip(x.iter()) {
                    *g += dpre * v;
                }
            }
        }
        let n = xs.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        loss / n
    }
}

/// `−y ln σ(z) − (1−y) ln(1−σ(z))` evaluated without overflow.
fn cross_entropy(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn parameter_count() {
        assert_eq!(Mlp::n_params(3, 5), 26);
        let mut rng = rng_from_seed(1);
        let net = Mlp::random(3, 5, 0.5, &mut rng);
        assert_eq!(net.params.len(), 26);
        assert!(net.params.iter().all(|w| w.abs() <= 0.5));
    }

    #[test]
    fn outputs_in_unit_interval() {
        let mut rng = rng_from_seed(2);
        let net = Mlp::random(2, 5, 0.5, &mut rng);
        for x in [[0.0, 0.0], [100.0, -100.0], [-1e3, 1e3]] {
            let p = net.predict(&x);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn cross_entropy_is_stable() {
        assert!((cross_entropy(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(800.0, 1.0).abs() < 1e-12);
        assert!((cross_entropy(800.0, 0.0) - 800.0).abs() < 1e-9);
        assert!(cross_entropy(-800.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(3);
        let mut net = Mlp::random(2, 5, 0.5, &mut rng);
        let xs_owned: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let xs: Vec<&[f64]> = xs_owned.iter().map(|v| v.as_slice()).collect();
        let ys: Vec<f64> = (0..8).map(|i| (i % 2) as f64).collect();
        let mut grad = vec![0.0; net.params.len()];
        net.loss_and_grad(&xs, &ys, &mut grad);
        let h = 1e-6;
        for i in 0..net.params.len() {
            let w = net.params[i];
            net.params[i] = w + h;
            let up = net.loss(&xs, &ys);
            net.params[i] = w - h;
            let down = net.loss(&xs, &ys);
            net.params[i] = w;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-7, "param {i}: {fd} vs {}", grad[i]);
        }
    }
}

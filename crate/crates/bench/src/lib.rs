//! Fixed inputs shared by the benchmarks.

use noisypu::datagen::{gen_synthetic, Family, SyntheticSpec};
use noisypu::PuDataset;

/// Gaussian benchmark cell with the given sample sizes and dimension.
pub fn gaussian(n_unlabeled: usize, n_labeled: usize, dims: usize, seed: u64) -> PuDataset {
    gen_synthetic(&SyntheticSpec {
        family: Family::Gaussian,
        delta_mu: 2.0,
        alpha: 0.25,
        beta: 0.95,
        n_unlabeled,
        n_labeled,
        seed,
        dims,
    })
    .expect("valid spec")
}

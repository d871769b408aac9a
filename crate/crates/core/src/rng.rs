//! Seed handling. Every random stream in the crate is a ChaCha8 generator
//! seeded from an explicit 64-bit value, so runs replay across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PuRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed for a named sub-stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn rng_from_seed(seed: u64) -> PuRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, stream: u64) -> PuRng {
    rng_from_seed(derive_seed(seed, stream))
}

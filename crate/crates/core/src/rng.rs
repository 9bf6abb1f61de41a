//! Seeded randomness. Every stochastic operation derives its stream from
//! a user-visible 64-bit seed so runs are reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Derives an independent generator for (`seed`, `label`, `index`).
/// Consumers that may run concurrently (forest trees, CV folds) each get
/// their own stream, so execution order cannot change the results.
pub fn stream_rng(seed: u64, label: &str, index: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, label, index))
}

pub fn stream_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut state = splitmix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &byte in label.as_bytes() {
        state = splitmix64(state ^ u64::from(byte));
    }
    splitmix64(state ^ index)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

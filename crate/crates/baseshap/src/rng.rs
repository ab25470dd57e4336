//! Deterministic counter-based RNG streams.
//!
//! Every source of randomness in the crate derives a ChaCha stream from a
//! root seed plus a list of integer tags (step index, function index, ...),
//! so any sub-stream can be reproduced in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent RNG from a root seed and a tag path.
pub fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(seed ^ 0x5ba5_e1e5_0000_0001);
    for &t in tags {
        state = splitmix(state ^ splitmix(t));
    }
    ChaCha8Rng::seed_from_u64(state)
}

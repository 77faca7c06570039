//! Deterministic seed derivation.
//!
//! Every random stream in a sweep is addressed by a path of counters below a
//! root seed, e.g. `(root, cell, trial, purpose)`. The path is folded through
//! SplitMix64 so that neighbouring counters give unrelated streams:
//!
//! ```text
//! h0 = splitmix64(root)
//! h_{n+1} = splitmix64(h_n ^ splitmix64(path[n] + (n+1)·0x9E3779B97F4A7C15))
//! ```
//!
//! Rerunning one cell or one trial in isolation therefore reproduces exactly
//! the stream it saw inside a full sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(splitmix64(root), |h, (n, &p)| {
        let salt = GOLDEN.wrapping_mul(n as u64 + 1);
        splitmix64(h ^ splitmix64(p.wrapping_add(salt)))
    })
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

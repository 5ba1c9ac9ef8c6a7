//! Deterministic, counter-derived random streams.
//!
//! Every stochastic stage of a run owns its own stream, keyed by the master
//! seed plus a path of counters (stage tag, iteration, particle index, ...).
//! Particle propagation can then run on any number of worker threads and
//! still consume exactly the same random numbers per particle, so results
//! are bit-identical regardless of parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags, spaced apart so a path like `[KERNEL, r, t]` can never
/// collide with `[INIT, t]` for small counters.
pub mod tag {
    pub const INIT: u64 = 0x01;
    pub const KERNEL: u64 = 0x02;
    pub const RESAMPLE: u64 = 0x03;
    pub const DATA: u64 = 0x04;
    pub const SPLIT: u64 = 0x05;
    pub const SUBFIT: u64 = 0x06;
    pub const MCMC: u64 = 0x07;
}

/// SplitMix64 finalizer; a bijective 64-bit mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit key from a master seed and a counter path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master ^ 0x243f6a8885a308d3);
    for &word in path {
        state = mix(state ^ mix(word));
    }
    state
}

/// An independent random stream for the given stage path.
pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

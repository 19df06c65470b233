//! Seeded random streams.
//!
//! All stochastic operations draw from ChaCha8, which is stable across
//! platforms and crate versions. Independent sub-computations (folds, repeats,
//! resamples) each get their own stream of the same seed so that parallel
//! execution cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of `seed`. Distinct streams never overlap.
pub fn stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Well-known stream ids, so different strategies sharing a seed do not reuse
/// the same randomness.
pub mod streams {
    pub const SHUFFLE: u64 = 1;
    pub const DEV: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const RANDOM_LENGTH: u64 = 4;
    pub const ADVERSARIAL: u64 = 5;
    pub const PROBE: u64 = 6;
    pub const RESAMPLE: u64 = 7;
    pub const HOLDOUT: u64 = 8;

    /// Stream id for repeat `run` of a base stream.
    pub fn per_run(base: u64, run: usize) -> u64 {
        (base << 32) | run as u64
    }
}

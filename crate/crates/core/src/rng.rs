//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, domain, index)`. Streams with different keys are independent, so a
//! computation split across threads draws the same numbers regardless of the
//! order in which the pieces run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream domains. Each consumer of randomness owns one.
pub mod domain {
    pub const PAIRS: u64 = 1;
    pub const SUBSAMPLE: u64 = 2;
    pub const BOURGAIN: u64 = 3;
    pub const JL: u64 = 4;
    pub const MIXTURE: u64 = 5;
    pub const INIT: u64 = 6;
    pub const TRAIN: u64 = 7;
    pub const PRETRAIN: u64 = 8;
    pub const SYNTH: u64 = 9;
    pub const EVAL: u64 = 10;
    pub const TRIAL: u64 = 11;
    pub const SHUFFLE: u64 = 12;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one per trial.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)).wrapping_add(index))
}

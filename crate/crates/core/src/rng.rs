//! Seed derivation.
//!
//! Every random decision in a trial draws from a ChaCha8 stream keyed by the
//! trial seed and a fixed stream id, so adding a consumer never perturbs the
//! others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids for the independent consumers inside one trial.
pub mod stream {
    pub const NETWORK_INIT: u64 = 1;
    pub const ACTIONS: u64 = 2;
    pub const ENVIRONMENT: u64 = 3;
    pub const REPLAY: u64 = 4;
    pub const MASK: u64 = 5;
    pub const PAN_FEATURES: u64 = 6;
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

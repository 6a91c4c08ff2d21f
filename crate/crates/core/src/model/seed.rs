//! Deterministic stream derivation.
//!
//! Every random quantity in a run (library, demands, codebooks, noise) is
//! drawn from its own stream whose seed is a hash of the master seed and a
//! path such as `[trial, role, index]`. Streams never depend on evaluation
//! order, so results do not change with the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const ROLE_LIBRARY: u64 = 1;
pub const ROLE_DEMANDS: u64 = 2;
pub const ROLE_CODEBOOK: u64 = 3;
pub const ROLE_NOISE: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with `path` into a child seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, p| {
        splitmix64(acc ^ splitmix64(*p))
    })
}

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

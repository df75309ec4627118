//! Deterministic seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by a seed derived
//! from the run seed and a path of integers (iteration, group, rollout, cycle,
//! purpose). Derivation is order-sensitive and independent of thread layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, so streams that share a path never collide.
pub mod stream {
    pub const POLICY: u64 = 1;
    pub const GENERATOR: u64 = 2;
    pub const SCENE_BANK: u64 = 3;
    pub const QUERY_PICK: u64 = 4;
    pub const ROLLOUT: u64 = 5;
    pub const INIT: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

//! Seed derivation.
//!
//! Every stochastic component owns a generator seeded from `(root seed, tags...)`
//! so that results never depend on call order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags. Distinct constants keep unrelated streams from colliding.
pub mod tag {
    pub const SYNTHETIC: u64 = 0x5359_4e54;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const PARTITION: u64 = 0x5041_5254;
    pub const KMEANS: u64 = 0x4b4d_4541;
    pub const ELBOW: u64 = 0x454c_4257;
    pub const SELECT: u64 = 0x5345_4c45;
    pub const STRAGGLE: u64 = 0x5354_5247;
    pub const TRAIN: u64 = 0x5452_4149;
    pub const MODEL_INIT: u64 = 0x494e_4954;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, tags))
}

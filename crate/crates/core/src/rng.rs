//! Deterministic seed derivation.
//!
//! Every random stream in the crate (a tree inside a forest, one shuffle of one
//! column during permutation importance, a dataset split) is seeded from a
//! parent seed plus a tuple of small integers that identify the stream. The
//! mixing is SplitMix64 applied once per component, so streams are independent
//! of the order or thread in which they are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `parts` into `seed`, one SplitMix64 round per component.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A ChaCha8 generator for the stream identified by `parts` under `seed`.
pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, parts))
}

/// Stream tags, so that different consumers never share a stream.
pub(crate) mod tag {
    pub const TREE: u64 = 1;
    pub const PERMUTE: u64 = 2;
    pub const JOINT_PERMUTE: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const AUGMENT: u64 = 5;
    pub const PLANTED: u64 = 6;
    pub const PERCEPTRON: u64 = 7;
}

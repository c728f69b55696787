//! Seed derivation. Every random stream in the pipeline is a ChaCha8 generator
//! seeded from the master seed through [`mix`], so sub-tasks can run in any
//! order (or in parallel) and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream index.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN).wrapping_add(1)))
}

/// Derive a child seed from a path of indices, e.g. `(fold, classifier)`.
pub fn mix_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |acc, &i| mix(acc, i))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Counter-style random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user seed plus a purpose tag and two indices, so a replicate or fold gets
//! the same stream whether work runs serially or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for [`derived_rng`].
pub mod purpose {
    pub const FOLDS: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const TUNING_VALIDATION: u64 = 3;
    pub const PERFORMANCE_VALIDATION: u64 = 4;
    pub const TUNING_TRAIN: u64 = 5;
    pub const TRUTH: u64 = 6;
    pub const DATASET: u64 = 7;
}

/// Generator for `(seed, purpose, a, b)`; distinct tuples give independent
/// streams.
pub fn derived_rng(seed: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

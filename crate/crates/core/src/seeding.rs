//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 generator. Work that
//! is split into independent units (sampled paths, simulation replicates) gets
//! one stream per unit, keyed by [`substream_seed`], so results do not depend
//! on how the units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of unit `index` under master `seed`:
/// `mix64(mix64(seed) ^ (index + 1) * 0x9e3779b97f4a7c15)` with wrapping arithmetic.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn substream(seed: u64, index: u64) -> StreamRng {
    rng(substream_seed(seed, index))
}

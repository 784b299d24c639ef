//! Seeded, stream-splittable random number generation.
//!
//! Every sampler in this crate takes an explicit stream so that results are
//! bit-identical across runs and independent of worker count: parallel loops
//! derive one stream per work item from `(seed, index)` instead of sharing a
//! sequential generator.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The concrete generator used throughout the crate.
pub type Stream = ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent generator for work item `index` under `seed`.
///
/// The (seed, index) pair is expanded through SplitMix64 into a full 256-bit
/// ChaCha key, so streams for distinct indices are statistically independent
/// and the derivation is stable across platforms.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut state = seed ^ 0xa076_1d64_78bd_642f_u64.wrapping_mul(index.wrapping_add(1));
    // fold index in twice so (seed, index) and (seed', index') collisions
    // require a full 128-bit coincidence
    state = state.wrapping_add(splitmix64(&mut { index }));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    Stream::from_seed(key)
}

/// Derives a fresh 64-bit seed for a nested parallel loop, so inner loops
/// can re-split without colliding with the outer streams.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ 0xa076_1d64_78bd_642f_u64.wrapping_mul(index.wrapping_add(1));
    splitmix64(&mut state)
}

/// Root stream for a run: equivalent to `stream(seed, 0)`.
pub fn root(seed: u64) -> Stream {
    stream(seed, 0)
}

//! Seeded random number generation.
//!
//! ChaCha8 has a fixed, platform-independent output stream, so a `(seed,
//! word position)` pair identifies the exact state of a generation run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all sampling and composition.
pub type GenRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of 32-bit words consumed from the stream so far.
pub fn draws(rng: &GenRng) -> u64 {
    rng.get_word_pos() as u64
}

/// Seed of the `attempt`-th try for example slot `index`.
///
/// Attempt zero is `seed ^ index`; retries flip bits above the index range so
/// they never collide with another slot's first attempt.
pub fn example_seed(seed: u64, index: u64, attempt: u32) -> u64 {
    seed ^ index ^ ((attempt as u64) << 40)
}

//! Seeded, stream-indexed random number generation.
//!
//! Every stochastic routine in this crate draws from a counter-based ChaCha
//! generator opened at an explicit `(seed, stream)` pair. Batch operations
//! give replicate `i` its own stream, so output is reproducible and
//! independent of evaluation order, and logically distinct sampling stages
//! derive unrelated seeds via [`derive`] so adding draws to one stage never
//! shifts the randomness of another.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Open stream `stream` of the generator keyed by `seed`.
///
/// Streams of the same seed are statistically independent, as are generators
/// with different seeds.
pub fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an unrelated seed for a distinct sampling stage.
///
/// One splitmix64 round over `seed` and `label`; the same pair always yields
/// the same derived seed.
pub fn derive(seed: u64, label: u64) -> u64 {
    // Offsetting the label keeps (0, 0) away from the mixer's fixed point at
    // zero.
    let mut z = seed ^ label.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

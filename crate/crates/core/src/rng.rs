//! Seeded random streams.
//!
//! Every random quantity in the crate comes from ChaCha8 (`rand_chacha`),
//! keyed by `seed_from_u64(seed)` and then switched to stream number
//! `stream`. A replicate, ensemble draw or delay realization is therefore
//! reproducible in isolation from `(seed, stream)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for child `stream` of master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for replicate `index` of a run seeded with `master`.
///
/// The child seed is the first 64-bit output of `stream_rng(master, index)`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master, index).next_u64()
}

//! Seeded random streams.
//!
//! Every unit of parallel work (a tree, an ensemble member, a permutation)
//! draws from its own ChaCha stream keyed by `(seed, stream)`, so results do
//! not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type VimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> VimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> VimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a two-level key such as (tree, feature).
pub fn pair_stream(seed: u64, outer: u64, inner: u64) -> VimRng {
    stream(seed, (outer << 32) ^ inner)
}

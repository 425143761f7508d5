//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream addressed by
//! `(seed, domain, index)`, so e.g. rotation `r` draws the same matrix no
//! matter which thread computes it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that draw from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    NameClustering = 1,
    WordClustering = 2,
    Rotation = 3,
    Cleaning = 4,
    KMeansRestart = 5,
}

/// ChaCha stream for `index` within `domain`. Indices must stay below 2^48.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | index);
    rng
}

/// Derive a child seed, used when a component takes a plain `u64` seed.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, domain, index).next_u64()
}

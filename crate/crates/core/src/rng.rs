//! Seed handling.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed plus a stream id. ChaCha is counter based, so distinct streams
//! of one seed are independent and any cell of an experiment grid can be
//! reproduced without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Well-known stream ids so unrelated consumers of one seed never overlap.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const DATA: u64 = 3;
    pub const CONTAMINATE: u64 = 4;
    pub const EVAL: u64 = 5;
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and a list of coordinates, e.g.
/// `(digit, gamma index)` of an experiment cell.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    // splitmix64 finaliser folded over the coordinates
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &c in coords {
        h = h.wrapping_add(c).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

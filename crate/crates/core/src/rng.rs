//! Seeded random streams.
//!
//! Every stochastic routine takes a `ChaCha8Rng`. Independent streams for the
//! same run seed are obtained with [`stream`], which selects a ChaCha stream
//! id instead of reseeding, so streams never overlap.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as HmRng;

/// Stream ids used by the training drivers.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const STAGE1: u64 = 1;
    pub const STAGE1_EVAL: u64 = 2;
    pub const STAGE2: u64 = 3;
    pub const STAGE2_EVAL: u64 = 4;
    pub const EVAL: u64 = 5;
}

/// Stream `id` of the ChaCha8 generator seeded with `seed`.
pub fn stream(seed: u64, id: u64) -> HmRng {
    let mut rng = HmRng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

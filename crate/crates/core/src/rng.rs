//! Seeded random streams. Every consumer derives its own stream from a base
//! seed plus identifiers, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream identifiers for the different consumers of randomness.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const DROPOUT: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const HOLDOUT: u64 = 5;
    pub const POLICY: u64 = 6;
    pub const LANDSCAPE: u64 = 7;
    pub const FOREST: u64 = 8;
    pub const SUBSAMPLE: u64 = 9;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(seed, index)`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

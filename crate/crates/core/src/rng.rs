//! Seeded random streams. Every random draw in the pipeline goes through
//! [`stream`], so results depend only on (seed, purpose).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Derives an independent generator for `purpose` from a user seed.
pub fn stream(seed: u64, purpose: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(purpose)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) mod purpose {
    pub const POINT_SAMPLE: u64 = 1;
    pub const DOWNSAMPLE: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const DROPOUT: u64 = 5;
}

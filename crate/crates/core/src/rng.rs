//! Seed plan: every random draw in the crate comes from a ChaCha stream whose
//! key is derived by hashing a parent seed with a child tag, so streams for
//! different days, purposes or resamples never overlap and adding a new
//! consumer never shifts an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags for per-day substreams.
pub mod tag {
    pub const BROWNIAN: u64 = 0xB0;
    pub const JUMPS: u64 = 0x10;
    pub const NOISE: u64 = 0xE0;
    pub const BOOTSTRAP: u64 = 0xB5;
    pub const KERNEL: u64 = 0x4B;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` for `index`.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix(splitmix(parent) ^ splitmix(index.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(parent: u64, index: u64) -> Stream {
    stream(derive(parent, index))
}

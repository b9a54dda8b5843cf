//! Seed derivation.
//!
//! Every random stream is ChaCha8 keyed by the 64-bit master seed (expanded
//! with `seed_from_u64`) and separated by the ChaCha stream id, which is the
//! replicate index. Replicate `r` therefore sees the same numbers whatever the
//! thread count or the order in which replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type ChainRng = ChaCha8Rng;

pub const ALGORITHM: &str =
    "ChaCha8 (rand_chacha), key = seed_from_u64(master), stream = replicate";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub replicate: u64,
}

pub fn replicate_rng(master: u64, replicate: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replicate);
    rng
}

/// Derive an independent master seed for a sub-experiment, e.g. one value of N.
pub fn sub_seed(master: u64, tag: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

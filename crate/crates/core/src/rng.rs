//! Seed handling.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] built from an
//! [`RngSeed`]. Independent sub-streams are derived with
//! [`RngSeed::stream`], which mixes `(seed, stream_id)` through two rounds of
//! the SplitMix64 finalizer. The derivation uses only integer arithmetic, so a
//! given `(seed, stream_id)` pair yields the same generator on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Derives the seed of an independent sub-stream.
    pub fn stream(self, stream_id: u64) -> RngSeed {
        RngSeed(splitmix64(splitmix64(self.0) ^ splitmix64(stream_id.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// Stream identifiers used by the training and sampling routines.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const UNIFORMITY: u64 = 3;
    pub const MATCHED: u64 = 4;
    pub const MISMATCHED: u64 = 5;
    pub const POLICY: u64 = 6;
    pub const EVAL: u64 = 7;
    pub const CENTERS: u64 = 8;
    pub const EXPANSION: u64 = 9;
    pub const SYNTH: u64 = 10;
}

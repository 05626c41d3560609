//! Keyed random streams.
//!
//! Every random draw is addressed by `(master_seed, label, index)`, so users,
//! searches and replications can be generated in any order or on any number
//! of threads with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    key: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, label: &str) -> Self {
        Self {
            key: mix64(master_seed ^ mix64(fnv1a(label.as_bytes()))),
        }
    }

    /// Nested stream under this one.
    pub fn child(&self, label: &str) -> Self {
        Self::new(self.key, label)
    }

    pub fn seed(&self, index: u64) -> u64 {
        mix64(self.key ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
    }

    pub fn rng(&self, index: u64) -> StreamRng {
        StreamRng::seed_from_u64(self.seed(index))
    }
}

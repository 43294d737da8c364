//! Counter-based random streams.
//!
//! Every (seed, replica, generation, vertex) tuple owns its own generator, so
//! a trial's randomness does not depend on scheduling or on which other
//! vertices happen to be occupied. Runs that share a seed and differ only in
//! their caps consume identical draws for the particles they have in common.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a word sequence.
pub fn mix(words: &[u64]) -> u64 {
    words.iter().fold(0x6a09_e667_f3bc_c909, |h, &w| splitmix64(h ^ splitmix64(w)))
}

/// Uniform in [0,1) from the top 53 bits of a hash.
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Identifies the streams of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replica: u64,
}

impl StreamKey {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    /// Generator for the particles at `vertex` in generation `generation`.
    pub fn rng(&self, generation: u64, vertex: u64) -> StreamRng {
        StreamRng::seed_from_u64(mix(&[self.seed, self.replica, generation, vertex]))
    }

    /// Seed reported for the replica in output tables.
    pub fn replica_seed(&self) -> u64 {
        mix(&[self.seed, self.replica])
    }
}

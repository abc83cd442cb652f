//! Keyed random streams.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a hash
//! of `(run seed, purpose, worker, round, slot)`. Draws therefore do not
//! depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps e.g. mini-batch and attack draws apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Minibatch = 1,
    Attack = 2,
    Partition = 3,
    Synthetic = 4,
    NoiseEstimate = 5,
}

/// Stream coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub worker: u64,
    pub round: u64,
    pub slot: u64,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose, worker: usize, round: usize, slot: usize) -> Self {
        StreamKey {
            seed,
            purpose,
            worker: worker as u64,
            round: round as u64,
            slot: slot as u64,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut h = splitmix64(self.seed);
        for (i, word) in [
            self.purpose as u64,
            self.worker,
            self.round,
            self.slot,
        ]
        .into_iter()
        .enumerate()
        {
            h = splitmix64(h ^ word.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
            seed[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

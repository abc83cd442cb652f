use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;

/// How a worker forms its per-slot batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchSpec {
    /// The whole shard, in order; gives deterministic gradients.
    Full,
    /// `size` indices drawn uniformly with replacement.
    Sampled(usize),
}

/// Draws batch indices into a shard of `shard_len` samples.
pub fn sample_minibatch(shard_len: usize, batch: BatchSpec, key: StreamKey) -> Vec<usize> {
    debug_assert!(shard_len > 0, "sampling from an empty shard");
    match batch {
        BatchSpec::Full => (0..shard_len).collect(),
        BatchSpec::Sampled(size) => {
            let mut rng = key.rng();
            (0..size).map(|_| rng.random_range(0..shard_len)).collect()
        }
    }
}

//! Label-skewed (non-IID) partitioning across worker pairs.
//!
//! Samples are sorted by label and cut into `Q/2` contiguous label groups, one
//! per worker pair; the two workers of a pair take alternating samples of
//! their group, so both see the same digits. With upper-label removal
//! enabled, the odd-indexed pairs are given the lowest-label groups and any
//! sample with label `>= ceil(C/2)` is stripped from their shards. Finally
//! every shard is truncated to the common minimum size.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionOptions {
    pub workers: usize,
    pub seed: u64,
    pub remove_upper_labels: bool,
}

/// Per-worker row indices into the training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardAssignment {
    pub shards: Vec<Vec<usize>>,
}

impl ShardAssignment {
    pub fn shard(&self, worker: usize) -> &[usize] {
        &self.shards[worker]
    }

    pub fn workers(&self) -> usize {
        self.shards.len()
    }

    /// Per-worker label histograms.
    pub fn label_histograms(&self, ds: &Dataset) -> Vec<Vec<usize>> {
        self.shards
            .iter()
            .map(|rows| {
                let mut h = vec![0; ds.classes()];
                for &r in rows {
                    h[ds.label(r)] += 1;
                }
                h
            })
            .collect()
    }
}

pub fn partition_heterogeneous(ds: &Dataset, opts: PartitionOptions) -> Result<ShardAssignment> {
    let q = opts.workers;
    if q < 2 || !q.is_multiple_of(2) {
        return Err(Error::Partition(format!(
            "worker count must be even and >= 2, got {q}"
        )));
    }
    let pairs = q / 2;
    if ds.len() < q {
        return Err(Error::Partition(format!(
            "{} samples cannot fill {q} shards",
            ds.len()
        )));
    }

    // label-sorted order, seeded shuffle inside each label
    let mut rng = StreamKey::new(opts.seed, Purpose::Partition, 0, 0, 0).rng();
    let mut order = Vec::with_capacity(ds.len());
    for class in 0..ds.classes() {
        let mut rows: Vec<usize> = (0..ds.len()).filter(|&r| ds.label(r) == class).collect();
        rows.shuffle(&mut rng);
        order.extend(rows);
    }

    let base = order.len() / pairs;
    let extra = order.len() % pairs;
    let mut groups = Vec::with_capacity(pairs);
    let mut start = 0;
    for g in 0..pairs {
        let len = base + usize::from(g < extra);
        groups.push(&order[start..start + len]);
        start += len;
    }

    let group_of_pair: Vec<usize> = if opts.remove_upper_labels {
        let odd: Vec<usize> = (0..pairs).filter(|p| p % 2 == 1).collect();
        let even: Vec<usize> = (0..pairs).filter(|p| p % 2 == 0).collect();
        let mut map = vec![0; pairs];
        for (g, &p) in odd.iter().chain(even.iter()).enumerate() {
            map[p] = g;
        }
        map
    } else {
        (0..pairs).collect()
    };

    let upper = ds.classes().div_ceil(2);
    let mut shards = vec![Vec::new(); q];
    for pair in 0..pairs {
        for (pos, &row) in groups[group_of_pair[pair]].iter().enumerate() {
            if opts.remove_upper_labels && pair % 2 == 1 && ds.label(row) >= upper {
                continue;
            }
            shards[2 * pair + pos % 2].push(row);
        }
    }

    if let Some(w) = shards.iter().position(Vec::is_empty) {
        return Err(Error::Partition(format!(
            "worker {w} (pair {}) has an empty shard after removing labels >= {upper}",
            w / 2
        )));
    }
    let min = shards.iter().map(Vec::len).min().unwrap_or(0);
    for s in &mut shards {
        s.truncate(min);
    }
    Ok(ShardAssignment { shards })
}

/// IID split: a seeded shuffle dealt round-robin, equal shard sizes.
pub fn partition_iid(ds: &Dataset, workers: usize, seed: u64) -> Result<ShardAssignment> {
    if workers == 0 || ds.len() < workers {
        return Err(Error::Partition(format!(
            "{} samples cannot fill {workers} shards",
            ds.len()
        )));
    }
    let mut rng = StreamKey::new(seed, Purpose::Partition, 0, 0, 0).rng();
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng);
    let per = ds.len() / workers;
    let mut shards = vec![Vec::with_capacity(per); workers];
    for (pos, &row) in order[..per * workers].iter().enumerate() {
        shards[pos % workers].push(row);
    }
    Ok(ShardAssignment { shards })
}

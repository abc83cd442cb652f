//! Datasets, loaders, heterogeneous partitioning, sampling and synthetic
//! quadratic problems.

mod csv;
mod idx;
mod partition;
mod sampling;
mod synth;

pub use self::csv::load_csv;
pub use self::idx::{load_idx, parse_idx_images, parse_idx_labels};
pub use self::partition::{partition_heterogeneous, partition_iid, PartitionOptions, ShardAssignment};
pub use self::sampling::{sample_minibatch, BatchSpec};
pub use self::synth::{synth_quadratic, SyntheticInstance, SyntheticSpec};

use crate::error::{Error, Result};

/// Labelled samples with row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    num_features: usize,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        num_features: usize,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Data("dataset needs at least one feature".into()));
        }
        if features.len() != labels.len() * num_features {
            return Err(Error::Data(format!(
                "feature matrix has {} entries, expected {} rows x {} columns",
                features.len(),
                labels.len(),
                num_features
            )));
        }
        if let Some(bad) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite feature in row {}",
                bad / num_features
            )));
        }
        if let Some((row, y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
            return Err(Error::Data(format!(
                "label {y} in row {row} outside 0..{classes}"
            )));
        }
        Ok(Dataset {
            features,
            num_features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copy of the listed rows, in the listed order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.num_features);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Dataset {
            features,
            num_features: self.num_features,
            labels,
            classes: self.classes,
        }
    }

    /// First `n` rows (or all, when shorter).
    pub fn truncated(&self, n: usize) -> Dataset {
        let rows: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&rows)
    }

    /// Same features, replacement labels (validated against the class count).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        if labels.len() != self.len() {
            return Err(Error::Data(format!(
                "{} replacement labels for {} rows",
                labels.len(),
                self.len()
            )));
        }
        Dataset::new(self.features.clone(), self.num_features, labels, self.classes)
    }

    /// Same rows with a larger class count (e.g. to match another split).
    pub fn with_classes(self, classes: usize) -> Result<Dataset> {
        if classes < self.classes {
            return Err(Error::Data(format!(
                "cannot shrink class count from {} to {classes}",
                self.classes
            )));
        }
        Ok(Dataset { classes, ..self })
    }

    /// Per-class sample counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for &y in &self.labels {
            h[y] += 1;
        }
        h
    }
}

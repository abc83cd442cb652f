//! Faulty-worker models.
//!
//! Faulty workers stay inside the message format of the protocol they attack:
//! under FRPG/LFRPG they upload a penalty gradient computed against a
//! fabricated model, so their influence is capped exactly like an honest
//! worker's.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::rng::StreamKey;
use crate::vector::ModelVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    None,
    LabelFlip,
    Gaussian { scale: f64 },
}

/// Which attack the faulty workers run, and who they are.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Zero-based worker indices.
    pub faulty: Vec<usize>,
}

impl AttackSpec {
    /// The last `faulty` of `workers` are faulty.
    pub fn last(kind: AttackKind, workers: usize, faulty: usize) -> Self {
        AttackSpec {
            kind,
            faulty: (workers - faulty..workers).collect(),
        }
    }

    pub fn none() -> Self {
        AttackSpec {
            kind: AttackKind::None,
            faulty: Vec::new(),
        }
    }

    pub fn validate(&self, workers: usize) -> Result<()> {
        if let Some(&bad) = self.faulty.iter().find(|&&n| n >= workers) {
            return Err(Error::Config(format!(
                "faulty worker {bad} outside 0..{workers}"
            )));
        }
        let mut sorted = self.faulty.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.faulty.len() {
            return Err(Error::Config("duplicate faulty worker index".into()));
        }
        if let AttackKind::Gaussian { scale } = self.kind {
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::Config(format!("gaussian scale must be >= 0, got {scale}")));
            }
        }
        Ok(())
    }

    pub fn is_faulty(&self, worker: usize) -> bool {
        self.faulty.contains(&worker)
    }

    /// Runtime behaviour of `worker`. Label flipping is a data corruption, so
    /// the worker itself runs the honest algorithm.
    pub fn behavior(&self, worker: usize) -> Behavior {
        match self.kind {
            AttackKind::Gaussian { scale } if self.is_faulty(worker) => Behavior::Gaussian { scale },
            _ => Behavior::Honest,
        }
    }
}

/// What a worker does each slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    Honest,
    Gaussian { scale: f64 },
}

/// Protocol the faulty worker is speaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Frpg,
    Lfrpg,
    Rsa,
    Krum,
    GeoMed,
    MeanSgd,
}

/// Replaces every label `y` with `(classes − 1) − y`; features untouched.
pub fn corrupt_labels(shard: &Dataset, classes: usize) -> Result<Dataset> {
    let mut labels = Vec::with_capacity(shard.len());
    for (row, &y) in shard.labels().iter().enumerate() {
        if y >= classes {
            return Err(Error::Data(format!(
                "label {y} in row {row} outside 0..{classes}"
            )));
        }
        labels.push(classes - 1 - y);
    }
    shard.with_labels(labels)
}

/// `d` independent draws of `scale · N(0, 1)` from the keyed stream.
pub fn gaussian_model(dim: usize, scale: f64, key: StreamKey) -> ModelVector {
    let mut rng = key.rng();
    ModelVector::from_vec(
        (0..dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// The message a faulty worker sends given its fabricated model.
///
/// FRPG/LFRPG: `λ ∇p(w0 − fabricated)` (LFRPG callers average these over the
/// frame). RSA: the server-side term `λ sign(w0 − fabricated)`, element-wise.
/// Krum, GeoMed and mean-SGD: the fabricated vector itself.
pub fn faulty_upload(
    protocol: Protocol,
    w0: &ModelVector,
    fabricated: &ModelVector,
    penalty: &PenaltySpec,
) -> Result<ModelVector> {
    match protocol {
        Protocol::Frpg | Protocol::Lfrpg => penalty.weighted_grad(&w0.sub(fabricated)),
        Protocol::Rsa => Ok(ModelVector::from_vec(
            w0.iter()
                .zip(fabricated.iter())
                .map(|(a, b)| penalty.weight * crate::baselines::sign(a - b))
                .collect(),
        )),
        Protocol::Krum | Protocol::GeoMed | Protocol::MeanSgd => Ok(fabricated.clone()),
    }
}

use serde::{Deserialize, Serialize};

use crate::data::BatchSpec;
use crate::error::{Error, Result};

/// Every numeric knob the schedules, runners and bound calculators read.
///
/// Per-worker vectors (`delta`, `lipschitz`) have one entry per worker,
/// faulty ones included, indexed from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Penalty weight λ.
    pub lambda: f64,
    /// Huber smoothing constant μ.
    pub mu: f64,
    pub delta0: f64,
    pub lipschitz0: f64,
    pub delta: Vec<f64>,
    pub lipschitz: Vec<f64>,
    /// Q.
    pub workers: usize,
    /// N.
    pub reliable: usize,
    /// T, slots per LFRPG frame.
    pub frame_len: usize,
    /// Communication rounds (FRPG slots, LFRPG frames, baseline rounds).
    pub rounds: usize,
    pub batch: BatchSpec,
    /// Gradient-noise bounds σₙ of the reliable workers, in order.
    pub sigma: Option<Vec<f64>>,
    pub seed: u64,
}

impl HyperParams {
    /// Uniform δ and L across workers.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        lambda: f64,
        mu: f64,
        delta0: f64,
        lipschitz0: f64,
        delta: f64,
        lipschitz: f64,
        workers: usize,
        reliable: usize,
    ) -> Self {
        HyperParams {
            lambda,
            mu,
            delta0,
            lipschitz0,
            delta: vec![delta; workers],
            lipschitz: vec![lipschitz; workers],
            workers,
            reliable,
            frame_len: 1,
            rounds: 1,
            batch: BatchSpec::Full,
            sigma: None,
            seed: 0,
        }
    }

    /// B = Q − N.
    pub fn faulty(&self) -> usize {
        self.workers - self.reliable
    }

    /// G; the Huber penalty has unit gradient bound.
    pub fn gradient_power(&self) -> f64 {
        1.0
    }

    /// `σ₀² = λ²(Q+B)²G`.
    pub fn sigma0_sq(&self) -> f64 {
        let qb = (self.workers + self.faulty()) as f64;
        self.lambda * self.lambda * qb * qb * self.gradient_power()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("lambda", self.lambda)?;
        positive("mu", self.mu)?;
        positive("delta0", self.delta0)?;
        positive("lipschitz0", self.lipschitz0)?;
        if self.workers == 0 {
            return Err(Error::Config("workers (Q) must be at least 1".into()));
        }
        if self.reliable > self.workers {
            return Err(Error::Config(format!(
                "reliable workers N = {} exceeds workers Q = {} (need N <= Q)",
                self.reliable, self.workers
            )));
        }
        if self.frame_len == 0 {
            return Err(Error::Config("frame_len (T) must be at least 1".into()));
        }
        for (name, v) in [("delta", &self.delta), ("lipschitz", &self.lipschitz)] {
            if v.len() != self.workers {
                return Err(Error::Config(format!(
                    "{name} has {} entries for {} workers",
                    v.len(),
                    self.workers
                )));
            }
            for &x in v {
                positive(name, x)?;
            }
        }
        if let BatchSpec::Sampled(0) = self.batch {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.reliable {
                return Err(Error::Config(format!(
                    "sigma has {} entries for {} reliable workers",
                    s.len(),
                    self.reliable
                )));
            }
            if let Some(bad) = s.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("sigma entries must be >= 0, got {bad}")));
            }
        }
        Ok(())
    }
}

//! Step-size schedules shared by FRPG (indexed by slot) and LFRPG (indexed
//! by frame).
//!
//! `β_k = 2/(k+2)`, `α_{0,k} = (δ₀/14)(k+2)² + (3/2)L₀` at the server and
//! `α_{n,k} = (3δₙ/14)(k+2)² + Lₙ` at worker `n`. Both grow quadratically,
//! slowly enough that `δₙ/β_k ≥ α_{n,k+1} − α_{n,k}`.

use crate::error::{Error, Result};
use crate::harness::HyperParams;

/// Which participant a step size belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participant {
    Server,
    /// Zero-based worker index.
    Worker(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub delta0: f64,
    pub lipschitz0: f64,
    pub delta: Vec<f64>,
    pub lipschitz: Vec<f64>,
}

impl Schedule {
    pub fn from_params(h: &HyperParams) -> Self {
        Schedule {
            delta0: h.delta0,
            lipschitz0: h.lipschitz0,
            delta: h.delta.clone(),
            lipschitz: h.lipschitz.clone(),
        }
    }

    pub fn beta(&self, k: usize) -> Result<f64> {
        step_beta(k)
    }

    pub fn alpha(&self, who: Participant, k: usize) -> Result<f64> {
        if k < 1 {
            return Err(Error::Config(format!("step index must be >= 1, got {k}")));
        }
        let k2 = (k as f64 + 2.0).powi(2);
        match who {
            Participant::Server => Ok(self.delta0 / 14.0 * k2 + 1.5 * self.lipschitz0),
            Participant::Worker(n) => {
                let (d, l) = self
                    .delta
                    .get(n)
                    .zip(self.lipschitz.get(n))
                    .ok_or_else(|| Error::Config(format!("no step constants for worker {n}")))?;
                Ok(3.0 * d / 14.0 * k2 + l)
            }
        }
    }

    pub fn delta(&self, who: Participant) -> f64 {
        match who {
            Participant::Server => self.delta0,
            Participant::Worker(n) => self.delta[n],
        }
    }
}

/// `β_k = 2/(k+2)` for `k ≥ 1`.
pub fn step_beta(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::Config(format!("step index must be >= 1, got {k}")));
    }
    Ok(2.0 / (k as f64 + 2.0))
}

/// Step size `α` for participant `n` (0 = server, `n ≥ 1` = worker `n`).
pub fn step_alpha(n: usize, k: usize, h: &HyperParams) -> Result<f64> {
    let who = if n == 0 {
        Participant::Server
    } else {
        Participant::Worker(n - 1)
    };
    Schedule::from_params(h).alpha(who, k)
}

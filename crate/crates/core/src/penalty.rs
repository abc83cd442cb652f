//! Huber consensus penalty and its closed-form proximal operator.
//!
//! The penalty couples the server model to each worker model through
//! `p(w0 - wn)`. Its gradient norm never exceeds one, which is what caps the
//! influence any single worker (honest or not) can exert on the server.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::ModelVector;

/// Consensus penalty `λ · p(z)` with Huber `p` of smoothing radius `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    /// Huber smoothing constant.
    pub mu: f64,
    /// Penalty weight λ.
    pub weight: f64,
}

impl PenaltySpec {
    pub fn huber(mu: f64, weight: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("huber mu must be > 0, got {mu}")));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::Config(format!(
                "penalty weight must be >= 0, got {weight}"
            )));
        }
        Ok(PenaltySpec { mu, weight })
    }

    /// Bound `G` on the squared gradient norm of `p`. Huber has unit slope.
    pub fn gradient_power(&self) -> f64 {
        1.0
    }

    /// Unweighted `p(z)` and `∇p(z)`.
    pub fn eval(&self, z: &ModelVector) -> Result<(f64, ModelVector)> {
        z.ensure_finite("penalty argument")?;
        let r = z.norm();
        if r <= self.mu {
            Ok((r * r / (2.0 * self.mu), z.scale(1.0 / self.mu)))
        } else {
            Ok((r - self.mu / 2.0, unit(z, r)))
        }
    }

    /// Unweighted `p(z)` only.
    pub fn value(&self, z: &ModelVector) -> Result<f64> {
        z.ensure_finite("penalty argument")?;
        let r = z.norm();
        Ok(if r <= self.mu {
            r * r / (2.0 * self.mu)
        } else {
            r - self.mu / 2.0
        })
    }

    /// `∇p(z)`.
    pub fn grad(&self, z: &ModelVector) -> Result<ModelVector> {
        self.eval(z).map(|(_, g)| g)
    }

    /// Weighted penalty gradient `λ ∇p(z)`: the message a worker uploads.
    pub fn weighted_grad(&self, z: &ModelVector) -> Result<ModelVector> {
        Ok(shrink_to(self.grad(z)?.scale(self.weight), self.weight))
    }

    /// `argmin_x { c·p(x) + ½‖x − v‖² }`.
    ///
    /// The minimizer sits inside the quadratic zone exactly when
    /// `‖v‖ ≤ mu + c`; otherwise it shrinks `v` toward the origin by `c`.
    pub fn prox(&self, c: f64, v: &ModelVector) -> Result<ModelVector> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("prox scale must be > 0, got {c}")));
        }
        v.ensure_finite("prox argument")?;
        let r = v.norm();
        if r <= self.mu + c {
            Ok(v.scale(self.mu / (self.mu + c)))
        } else {
            Ok(v.scale(1.0 - c / r))
        }
    }
}

/// `z / r` with the rounding pulled inward so that its computed norm is at
/// most one; the upload cap relies on this holding exactly.
fn unit(z: &ModelVector, r: f64) -> ModelVector {
    shrink_to(z.scale(1.0 / r), 1.0)
}

/// Pulls `g` inward by a few ulps until its computed norm is at most `bound`.
fn shrink_to(mut g: ModelVector, bound: f64) -> ModelVector {
    while g.norm() > bound {
        g = g.scale(1.0 - f64::EPSILON);
    }
    g
}

/// Free-function form of [`PenaltySpec::eval`].
pub fn penalty_eval(spec: &PenaltySpec, z: &ModelVector) -> Result<(f64, ModelVector)> {
    spec.eval(z)
}

/// Free-function form of [`PenaltySpec::prox`].
pub fn penalty_prox(spec: &PenaltySpec, c: f64, v: &ModelVector) -> Result<ModelVector> {
    spec.prox(c, v)
}

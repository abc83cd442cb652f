//! Comparison methods: RSA (sign-penalty consensus), Krum, geometric median
//! via Weiszfeld, and plain gradient averaging.

pub mod geomed;
pub mod krum;
pub mod rsa;
pub mod run;

use serde::{Deserialize, Serialize};

pub use geomed::{geomed_objective, geomed_weiszfeld, GeoMedian, WEISZFELD_EPS};
pub use krum::krum_select;
pub use rsa::{rsa_round, rsa_server_update, rsa_worker_update, RsaState};
pub use run::{run_baseline, BaselineRunner};

use crate::error::{Error, Result};

/// Sign with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `η_k = c₀/√k`.
pub fn baseline_step(step_scale: f64, k: usize) -> f64 {
    step_scale / (k as f64).sqrt()
}

/// How the server combines worker messages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationRule {
    Rsa { lambda: f64, step_scale: f64 },
    Krum { assumed_faulty: usize, step_scale: f64 },
    GeoMed { tol: f64, max_iter: usize, step_scale: f64 },
    MeanSgd { step_scale: f64 },
}

impl AggregationRule {
    pub fn step_scale(&self) -> f64 {
        match *self {
            AggregationRule::Rsa { step_scale, .. }
            | AggregationRule::Krum { step_scale, .. }
            | AggregationRule::GeoMed { step_scale, .. }
            | AggregationRule::MeanSgd { step_scale } => step_scale,
        }
    }

    pub fn validate(&self, workers: usize) -> Result<()> {
        let c = self.step_scale();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("step_scale must be positive, got {c}")));
        }
        match *self {
            AggregationRule::Rsa { lambda, .. } if !(lambda > 0.0 && lambda.is_finite()) => Err(
                Error::Config(format!("rsa lambda must be positive, got {lambda}")),
            ),
            AggregationRule::Krum { assumed_faulty, .. } if workers < assumed_faulty + 3 => {
                Err(Error::Config(format!(
                    "krum needs Q - b - 2 >= 1 (Q = {workers}, b = {assumed_faulty})"
                )))
            }
            AggregationRule::GeoMed { tol, max_iter, .. } if !(tol > 0.0) || max_iter == 0 => {
                Err(Error::Config(format!(
                    "geomed needs tol > 0 and max_iter >= 1 (tol = {tol}, max_iter = {max_iter})"
                )))
            }
            _ => Ok(()),
        }
    }
}

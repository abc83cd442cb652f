//! Right-hand sides of the FRPG and LFRPG convergence envelopes.
//!
//! FRPG, after `K` rounds:
//!
//! ```text
//! 4/(K+2)² (F(w₀) − F* + Σₙ η9ₙ) + 4K/(K+2)² Σₙ η10ₙ
//! η9₀  = (3δ₀/8 + α₀,₁/2) ‖u₀* − v₀,₀‖²      η9ₙ  = αₙ,₁/2 ‖uₙ* − vₙ,₀‖²
//! η10₀ = (7λ²Q²G + 21σ₀²/8)/δ₀                η10ₙ = 7σₙ²/(12δₙ)
//! ```
//!
//! LFRPG, after `I` frames of `T` slots:
//!
//! ```text
//! 2η16/(T(I+2)²) + (η17 + I η18)/(I+2)²
//! η16 = Σₙ αₙ¹ ‖uₙ* − vₙ⁰‖²
//! η17 = (3δ₀/2 + 2α₀¹) ‖u₀* − v₀⁰‖² + (4/T) Σₖ F(wₖ⁰) − 4F*
//! η18 = Σₙ 7σₙ²/(3δₙ) + (11σ₀² + 28λ²Q²G)/δ₀
//! ```
//!
//! with `σ₀² = λ²(Q+B)²G` and sums over the server and the reliable workers.
//! Both envelopes also carry a neighbourhood term of order `λ²B²G/δ₀` with
//! an unknown constant; it is reported as a scale only.

use serde::Serialize;

use super::params::HyperParams;
use crate::algorithms::{Participant, Schedule};
use crate::data::{sample_minibatch, BatchSpec};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::rng::{Purpose, StreamKey};
use crate::vector::ModelVector;

/// Constants the envelopes read, restricted to the reliable workers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConstants {
    pub lambda: f64,
    pub gradient_power: f64,
    pub workers: usize,
    pub faulty: usize,
    pub delta0: f64,
    pub lipschitz0: f64,
    pub delta: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub sigma: Vec<f64>,
    pub frame_len: usize,
}

impl BoundConstants {
    /// Picks the reliable workers' constants out of `h`; `h.sigma` must be set.
    pub fn from_params(h: &HyperParams, reliable: &[usize]) -> Result<Self> {
        let sigma = h.sigma.clone().ok_or_else(|| {
            Error::Config("bound needs per-worker noise bounds (hyper.sigma)".into())
        })?;
        if sigma.len() != reliable.len() {
            return Err(Error::Config(format!(
                "{} sigma entries for {} reliable workers",
                sigma.len(),
                reliable.len()
            )));
        }
        Ok(BoundConstants {
            lambda: h.lambda,
            gradient_power: h.gradient_power(),
            workers: h.workers,
            faulty: h.faulty(),
            delta0: h.delta0,
            lipschitz0: h.lipschitz0,
            delta: reliable.iter().map(|&n| h.delta[n]).collect(),
            lipschitz: reliable.iter().map(|&n| h.lipschitz[n]).collect(),
            sigma,
            frame_len: h.frame_len,
        })
    }

    pub fn sigma0_sq(&self) -> f64 {
        let qb = (self.workers + self.faulty) as f64;
        self.lambda * self.lambda * qb * qb * self.gradient_power
    }

    fn schedule(&self) -> Schedule {
        Schedule {
            delta0: self.delta0,
            lipschitz0: self.lipschitz0,
            delta: self.delta.clone(),
            lipschitz: self.lipschitz.clone(),
        }
    }

    fn alpha1(&self, who: Participant) -> f64 {
        self.schedule().alpha(who, 1).expect("index 1 is valid")
    }

    /// `λ²Q²G`.
    fn upload_power(&self) -> f64 {
        let q = self.workers as f64;
        self.lambda * self.lambda * q * q * self.gradient_power
    }

    /// Scale `λ²B²G/δ₀` of the neighbourhood term (its constant is unknown).
    pub fn neighborhood_scale(&self) -> f64 {
        let b = self.faulty as f64;
        self.lambda * self.lambda * b * b * self.gradient_power / self.delta0
    }
}

/// An envelope evaluated at a list of round (or frame) counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub rounds: Vec<usize>,
    pub values: Vec<f64>,
    /// See [`BoundConstants::neighborhood_scale`]; not included in `values`.
    pub neighborhood_scale: f64,
}

/// Squared distances `‖u* − v_init‖²`, server block first.
fn init_distances(
    c: &BoundConstants,
    optimum: Option<&[ModelVector]>,
    initial_v: &[ModelVector],
) -> Result<Vec<f64>> {
    let u = optimum.ok_or_else(|| Error::Config("bound needs the optimum u*".into()))?;
    let blocks = c.delta.len() + 1;
    if u.len() != blocks || initial_v.len() != blocks {
        return Err(Error::Config(format!(
            "bound expects {blocks} blocks (server + reliable), got optimum {} and initial {}",
            u.len(),
            initial_v.len()
        )));
    }
    Ok(u.iter().zip(initial_v).map(|(a, b)| a.dist_sq(b)).collect())
}

/// `[η9₀, η9₁, …]`.
pub fn frpg_eta9(c: &BoundConstants, dist: &[f64]) -> Vec<f64> {
    let mut out = vec![(3.0 * c.delta0 / 8.0 + c.alpha1(Participant::Server) / 2.0) * dist[0]];
    for n in 0..c.delta.len() {
        out.push(c.alpha1(Participant::Worker(n)) / 2.0 * dist[n + 1]);
    }
    out
}

/// `[η10₀, η10₁, …]`.
pub fn frpg_eta10(c: &BoundConstants) -> Vec<f64> {
    let mut out = vec![(7.0 * c.upload_power() + 21.0 / 8.0 * c.sigma0_sq()) / c.delta0];
    for (s, d) in c.sigma.iter().zip(&c.delta) {
        out.push(7.0 * s * s / (12.0 * d));
    }
    out
}

/// FRPG envelope. `initial_gap = F(w₀) − F(u*)`; `optimum` and `initial_v`
/// hold the server block followed by the reliable workers' blocks.
pub fn compute_frpg_bound(
    c: &BoundConstants,
    initial_gap: f64,
    optimum: Option<&[ModelVector]>,
    initial_v: &[ModelVector],
    rounds: &[usize],
) -> Result<BoundCurve> {
    let dist = init_distances(c, optimum, initial_v)?;
    let eta9: f64 = frpg_eta9(c, &dist).iter().sum();
    let eta10: f64 = frpg_eta10(c).iter().sum();
    let values = rounds
        .iter()
        .map(|&k| {
            let k = k as f64;
            let s = (k + 2.0).powi(2);
            4.0 / s * (initial_gap + eta9) + 4.0 * k / s * eta10
        })
        .collect();
    Ok(BoundCurve {
        rounds: rounds.to_vec(),
        values,
        neighborhood_scale: c.neighborhood_scale(),
    })
}

/// `(η16, η17, η18)`. `frame0_mean_value = (1/T) Σₖ F(wₖ⁰)`.
pub fn lfrpg_etas(
    c: &BoundConstants,
    dist: &[f64],
    frame0_mean_value: f64,
    optimum_value: f64,
) -> (f64, f64, f64) {
    let eta16: f64 = (0..c.delta.len())
        .map(|n| c.alpha1(Participant::Worker(n)) * dist[n + 1])
        .sum();
    let eta17 = (1.5 * c.delta0 + 2.0 * c.alpha1(Participant::Server)) * dist[0]
        + 4.0 * frame0_mean_value
        - 4.0 * optimum_value;
    let eta18: f64 = c
        .sigma
        .iter()
        .zip(&c.delta)
        .map(|(s, d)| 7.0 * s * s / (3.0 * d))
        .sum::<f64>()
        + (11.0 * c.sigma0_sq() + 28.0 * c.upload_power()) / c.delta0;
    (eta16, eta17, eta18)
}

/// LFRPG envelope over frame counts.
pub fn compute_lfrpg_bound(
    c: &BoundConstants,
    frame0_mean_value: f64,
    optimum_value: f64,
    optimum: Option<&[ModelVector]>,
    initial_v: &[ModelVector],
    frames: &[usize],
) -> Result<BoundCurve> {
    let dist = init_distances(c, optimum, initial_v)?;
    let (eta16, eta17, eta18) = lfrpg_etas(c, &dist, frame0_mean_value, optimum_value);
    let t = c.frame_len as f64;
    let values = frames
        .iter()
        .map(|&i| {
            let i = i as f64;
            let s = (i + 2.0).powi(2);
            2.0 * eta16 / (t * s) + (eta17 + i * eta18) / s
        })
        .collect();
    Ok(BoundCurve {
        rounds: frames.to_vec(),
        values,
        neighborhood_scale: c.neighborhood_scale(),
    })
}

/// Empirical noise bound per reliable worker: the largest
/// `‖∇f(w; batch) − ∇f(w)‖` over `draws` sampled batches at `w`.
/// This is an estimate, not a certified bound.
pub fn estimate_sigma(problem: &Problem, w: &ModelVector, draws: usize) -> Result<Vec<f64>> {
    let batch = problem.params.batch;
    problem
        .reliable
        .iter()
        .map(|&n| {
            let loss = &problem.workers[n];
            if let BatchSpec::Full = batch {
                return Ok(0.0);
            }
            let full = loss.full_grad(w)?;
            let mut worst: f64 = 0.0;
            for r in 0..draws {
                let key = StreamKey::new(problem.params.seed, Purpose::NoiseEstimate, n, r, 0);
                let idx = sample_minibatch(loss.num_samples(), batch, key);
                worst = worst.max(loss.grad(w, &idx)?.dist_sq(&full).sqrt());
            }
            Ok(worst)
        })
        .collect()
}

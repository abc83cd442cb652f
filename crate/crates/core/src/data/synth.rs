//! Synthetic strongly convex quadratic problems with a known optimum.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::loss::{LossSpec, QuadraticLoss};
use crate::objective::Objective;
use crate::penalty::PenaltySpec;
use crate::rng::{Purpose, StreamKey};
use crate::vector::ModelVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    /// Smallest eigenvalue of every worker matrix.
    pub delta: f64,
    /// Largest eigenvalue of every worker matrix.
    pub lipschitz: f64,
    /// Spread of the worker centers `bₙ ~ scale · N(0, I)`.
    pub center_scale: f64,
    pub seed: u64,
}

/// Per-worker quadratics plus the exact penalized optimum over the reliable ones.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub workers: Vec<QuadraticLoss>,
    pub server: QuadraticLoss,
    pub objective: Objective,
    /// Optimum blocks: index 0 is the server, 1..=N the reliable workers.
    pub optimum: Vec<ModelVector>,
    pub optimum_value: f64,
}

/// Generates `workers` quadratics `½(w − bₙ)ᵀAₙ(w − bₙ)` with spectrum in
/// `[delta, lipschitz]` (both endpoints attained), a ridge server term
/// `(delta0/2)‖w‖²`, and solves the penalized objective over the first
/// `reliable` workers (see [`solve_optimum`] for the tolerance).
pub fn synth_quadratic(
    spec: SyntheticSpec,
    workers: usize,
    reliable: usize,
    delta0: f64,
    penalty: PenaltySpec,
) -> Result<SyntheticInstance> {
    if !(spec.delta > 0.0 && spec.delta <= spec.lipschitz) {
        return Err(Error::Config(format!(
            "synthetic spectrum needs 0 < delta <= lipschitz, got delta={} lipschitz={}",
            spec.delta, spec.lipschitz
        )));
    }
    if spec.dim == 0 || reliable > workers {
        return Err(Error::Config(format!(
            "synthetic problem needs dim >= 1 and reliable <= workers (dim={}, N={reliable}, Q={workers})",
            spec.dim
        )));
    }
    let d = spec.dim;
    let mut losses = Vec::with_capacity(workers);
    for n in 0..workers {
        let mut rng = StreamKey::new(spec.seed, Purpose::Synthetic, n, 0, 0).rng();
        let mut basis: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
        linalg::orthonormalize_rows(&mut basis, d);
        let eig: Vec<f64> = (0..d)
            .map(|i| match i {
                0 => spec.delta,
                i if i == d - 1 => spec.lipschitz,
                _ => rng.random_range(spec.delta..=spec.lipschitz),
            })
            .collect();
        // A = Rᵀ diag(eig) R
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let s: f64 = (0..d).map(|k| basis[k * d + i] * eig[k] * basis[k * d + j]).sum();
                a[i * d + j] = s;
                a[j * d + i] = s;
            }
        }
        let b: Vec<f64> = (0..d)
            .map(|_| spec.center_scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        losses.push(QuadraticLoss::new(a, ModelVector::from_vec(b))?);
    }
    let server = QuadraticLoss::ridge(d, delta0)?;
    let objective = Objective::new(
        LossSpec::Quadratic(server.clone()),
        losses[..reliable]
            .iter()
            .cloned()
            .map(LossSpec::Quadratic)
            .collect(),
        penalty,
    );
    let smooth = losses
        .iter()
        .map(QuadraticLoss::smoothness)
        .fold(delta0, f64::max)
        + (reliable as f64 + 1.0) * penalty.weight / penalty.mu;
    let optimum = solve_optimum(&objective, smooth)?;
    let optimum_value = objective.value(&optimum[0], &optimum[1..])?;
    Ok(SyntheticInstance {
        workers: losses,
        server,
        objective,
        optimum,
        optimum_value,
    })
}

fn flatten_grad(obj: &Objective, x: &[ModelVector]) -> Result<Vec<ModelVector>> {
    let (g0, gs) = obj.grad(&x[0], &x[1..])?;
    let mut out = Vec::with_capacity(x.len());
    out.push(g0);
    out.extend(gs);
    Ok(out)
}

fn block_norm(x: &[ModelVector]) -> f64 {
    x.iter().map(ModelVector::norm_sq).sum::<f64>().sqrt()
}

/// Accelerated gradient descent with constant strongly-convex momentum and
/// gradient-based restart.
///
/// Stops at `‖∇F‖ < 1e-12`, or once the best gradient norm has not improved
/// for a while (stiff penalties put the floating-point floor above `1e-12`).
/// The best iterate is returned if its gradient norm is below `1e-9`.
pub(crate) fn solve_optimum(obj: &Objective, smooth: f64) -> Result<Vec<ModelVector>> {
    const TOL: f64 = 1e-12;
    const ACCEPT: f64 = 1e-9;
    const PATIENCE: usize = 20_000;
    const MAX_ITER: usize = 2_000_000;
    let d = obj.dim();
    let blocks = obj.workers.len() + 1;
    let mu = obj.strong_convexity();
    let kappa = smooth / mu;
    let momentum = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let step = 1.0 / smooth;

    let mut x = vec![ModelVector::zeros(d); blocks];
    let mut y = x.clone();
    let mut best = (f64::INFINITY, x.clone());
    let mut since_best = 0;
    for _ in 0..MAX_ITER {
        let gy = flatten_grad(obj, &y)?;
        let next: Vec<ModelVector> = y
            .iter()
            .zip(&gy)
            .map(|(yi, gi)| {
                let mut v = yi.clone();
                v.axpy(-step, gi);
                v
            })
            .collect();
        let gnorm = block_norm(&flatten_grad(obj, &next)?);
        if gnorm < best.0 {
            best = (gnorm, next.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        if gnorm < TOL || since_best > PATIENCE {
            break;
        }
        // restart when the step direction opposes the momentum
        let restart: f64 = gy
            .iter()
            .zip(next.iter().zip(&x))
            .map(|(g, (n, o))| g.dot(&n.sub(o)))
            .sum();
        let beta = if restart > 0.0 { 0.0 } else { momentum };
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| {
                let mut v = n.clone();
                v.axpy(beta, &n.sub(o));
                v
            })
            .collect();
        x = next;
    }
    if best.0 < ACCEPT {
        Ok(best.1)
    } else {
        Err(Error::Config(format!(
            "optimum solver stalled at gradient norm {:e} (needs < {ACCEPT:e})",
            best.0
        )))
    }
}

//! RSA: each worker keeps its own model and is tied to the server model by
//! an ℓ₁ penalty `λ‖w0 − wₙ‖₁`; both sides take sub-gradient steps.

use super::sign;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::vector::ModelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct RsaState {
    pub server: ModelVector,
    pub workers: Vec<ModelVector>,
}

impl RsaState {
    pub fn new(dim: usize, workers: usize) -> Self {
        RsaState {
            server: ModelVector::zeros(dim),
            workers: vec![ModelVector::zeros(dim); workers],
        }
    }
}

/// `λ sign(a − b)` element-wise.
pub(crate) fn signed_gap(lambda: f64, a: &ModelVector, b: &ModelVector) -> ModelVector {
    ModelVector::from_vec(a.iter().zip(b.iter()).map(|(x, y)| lambda * sign(x - y)).collect())
}

/// `w0 − η(∇f₀(w0) + Σ terms)` where `terms` are the per-worker
/// `λ sign(w0 − wₙ)` messages, summed in order.
pub fn rsa_server_update(
    w0: &ModelVector,
    grad_f0: &ModelVector,
    terms: &[ModelVector],
    eta: f64,
) -> ModelVector {
    let mut dir = grad_f0.clone();
    for t in terms {
        dir.add_assign(t);
    }
    let mut out = w0.clone();
    out.axpy(-eta, &dir);
    out
}

/// `wₙ − η(∇f(wₙ; x) + λ sign(wₙ − w0))`.
pub fn rsa_worker_update(
    wn: &ModelVector,
    grad: &ModelVector,
    w0: &ModelVector,
    lambda: f64,
    eta: f64,
) -> ModelVector {
    let mut dir = grad.clone();
    dir.add_assign(&signed_gap(lambda, wn, w0));
    let mut out = wn.clone();
    out.axpy(-eta, &dir);
    out
}

/// One simultaneous RSA round with every worker honest; `batches[n]` indexes
/// worker `n`'s shard and `eta` is the round's step size.
pub fn rsa_round(
    state: &mut RsaState,
    lambda: f64,
    eta: f64,
    f0: &LossSpec,
    losses: &[LossSpec],
    batches: &[Vec<usize>],
) -> Result<()> {
    if losses.len() != state.workers.len() || batches.len() != state.workers.len() {
        return Err(Error::Config(format!(
            "rsa round over {} workers given {} losses and {} batches",
            state.workers.len(),
            losses.len(),
            batches.len()
        )));
    }
    let w0 = &state.server;
    let terms: Vec<ModelVector> = state
        .workers
        .iter()
        .map(|wn| signed_gap(lambda, w0, wn))
        .collect();
    let new_workers = state
        .workers
        .iter()
        .zip(losses)
        .zip(batches)
        .map(|((wn, loss), batch)| {
            let g = loss.grad(wn, batch)?;
            Ok(rsa_worker_update(wn, &g, w0, lambda, eta))
        })
        .collect::<Result<Vec<_>>>()?;
    let new_server = rsa_server_update(w0, &f0.full_grad(w0)?, &terms, eta);
    state.server = new_server;
    state.workers = new_workers;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_server_step() {
        // w0 = 1, w1 = 0, λ = 1, ∇f₀ = 0, η = 1 → w0 = 0
        let w0 = ModelVector::from_vec(vec![1.0]);
        let t = signed_gap(1.0, &w0, &ModelVector::zeros(1));
        let out = rsa_server_update(&w0, &ModelVector::zeros(1), &[t], 1.0);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn agreeing_models_only_feel_the_regularizer() {
        use crate::loss::QuadraticLoss;
        let ridge = LossSpec::Quadratic(QuadraticLoss::ridge(2, 0.5).unwrap());
        let p = ModelVector::from_vec(vec![1.0, -2.0]);
        let mut st = RsaState {
            server: p.clone(),
            workers: vec![p.clone(), p.clone()],
        };
        rsa_round(&mut st, 1.0, 0.1, &ridge, &[ridge.clone(), ridge.clone()], &[vec![0], vec![0]])
            .unwrap();
        let expect = p.scale(1.0 - 0.1 * 0.5);
        assert!(st.server.dist_sq(&expect) < 1e-30);
        assert!(st.workers[0].dist_sq(&expect) < 1e-30);
    }
}

//! Reliable-worker recursions.
//!
//! One local update from a previous model `w_prev` and auxiliary `v_prev`:
//!
//! ```text
//! u = (1−β) w_prev + β v_prev
//! w = w0 − prox_{(λ/α) p}( w0 − u + ∇f(u; x)/α )
//! g = λ ∇p(w0 − w)
//! v = v_prev − (δ (v_prev − u) + ∇f(u; x) − g) / (δ + α β)
//! ```
//!
//! FRPG feeds the previous slot's `w`; LFRPG feeds the model from the same
//! slot of the previous frame.

use super::schedule::{Participant, Schedule};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;
use crate::vector::ModelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub u: ModelVector,
    pub w: ModelVector,
    pub v: ModelVector,
    /// `w_{n,k}^{i−1}` for `k = 1..T` (LFRPG only).
    history: Vec<ModelVector>,
    /// Models produced so far in the current frame.
    current: Vec<ModelVector>,
    frame_sum: Option<ModelVector>,
}

/// Per-slot inputs shared by FRPG and LFRPG.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub worker: usize,
    pub sched: &'a Schedule,
    pub loss: &'a LossSpec,
    pub penalty: &'a PenaltySpec,
}

struct LocalUpdate {
    u: ModelVector,
    w: ModelVector,
    v: ModelVector,
    g: ModelVector,
}

fn local_update(
    ctx: &StepContext<'_>,
    index: usize,
    w_prev: &ModelVector,
    v_prev: &ModelVector,
    w0: &ModelVector,
    batch: &[usize],
) -> Result<LocalUpdate> {
    let who = Participant::Worker(ctx.worker);
    let beta = ctx.sched.beta(index)?;
    let alpha = ctx.sched.alpha(who, index)?;
    let delta = ctx.sched.delta(who);

    let u = ModelVector::convex(w_prev, v_prev, beta);
    let grad = ctx.loss.grad(&u, batch)?;
    let mut arg = w0.sub(&u);
    arg.axpy(1.0 / alpha, &grad);
    let shrunk = ctx.penalty.prox(ctx.penalty.weight / alpha, &arg)?;
    let w = w0.sub(&shrunk);
    let g = ctx.penalty.weighted_grad(&w0.sub(&w))?;

    let denom = delta + alpha * beta;
    let mut v = v_prev.clone();
    for i in 0..v.dim() {
        let num = delta * (v_prev[i] - u[i]) + grad[i] - g[i];
        v[i] = v_prev[i] - num / denom;
    }
    for (what, x) in [("worker u", &u), ("worker w", &w), ("worker v", &v)] {
        x.ensure_finite(what)?;
    }
    Ok(LocalUpdate { u, w, v, g })
}

impl WorkerState {
    /// Zero-initialized state; the LFRPG history starts as `frame_len` copies
    /// of the initial model.
    pub fn new(dim: usize, frame_len: usize) -> Self {
        Self::with_initial(ModelVector::zeros(dim), ModelVector::zeros(dim), frame_len)
    }

    pub fn with_initial(w: ModelVector, v: ModelVector, frame_len: usize) -> Self {
        WorkerState {
            u: w.clone(),
            history: vec![w.clone(); frame_len],
            w,
            v,
            current: Vec::with_capacity(frame_len),
            frame_sum: None,
        }
    }

    pub fn history(&self) -> &[ModelVector] {
        &self.history
    }

    /// One FRPG slot; returns the upload `g_{n,k}`.
    pub fn frpg_step(
        &mut self,
        ctx: &StepContext<'_>,
        k: usize,
        w0: &ModelVector,
        batch: &[usize],
    ) -> Result<ModelVector> {
        let up = local_update(ctx, k, &self.w, &self.v, w0, batch)?;
        self.u = up.u;
        self.w = up.w;
        self.v = up.v;
        Ok(up.g)
    }

    /// Slot `k` (1-based) of LFRPG frame `i`. Returns the frame-averaged
    /// upload once `k` reaches the frame length.
    pub fn lfrpg_slot(
        &mut self,
        ctx: &StepContext<'_>,
        i: usize,
        k: usize,
        w0: &ModelVector,
        batch: &[usize],
    ) -> Result<Option<ModelVector>> {
        let frame_len = self.history.len();
        if k == 0 || k > frame_len || k != self.current.len() + 1 {
            return Err(Error::Protocol(format!(
                "worker {} slot {k} out of order (frame length {frame_len}, {} slots done)",
                ctx.worker,
                self.current.len()
            )));
        }
        let w_prev = self
            .history
            .get(k - 1)
            .ok_or_else(|| Error::Protocol(format!("missing history for slot {k}")))?;
        // v carries over between slots and across frames
        let up = local_update(ctx, i, w_prev, &self.v, w0, batch)?;
        self.u = up.u;
        self.w = up.w.clone();
        self.v = up.v;
        self.current.push(up.w);
        accumulate(&mut self.frame_sum, &up.g);

        if k < frame_len {
            return Ok(None);
        }
        self.history = std::mem::replace(&mut self.current, Vec::with_capacity(frame_len));
        let sum = self.frame_sum.take().expect("frame has at least one slot");
        Ok(Some(sum.scale(1.0 / frame_len as f64)))
    }

    /// Average of the models produced in the last completed frame.
    pub fn frame_mean(&self) -> ModelVector {
        let sum = ModelVector::sum_ordered(&self.history).expect("non-empty history");
        sum.scale(1.0 / self.history.len() as f64)
    }
}

/// Running frame sum that starts from the first term (no `0 + x` step).
pub(crate) fn accumulate(sum: &mut Option<ModelVector>, g: &ModelVector) {
    match sum {
        Some(s) => s.add_assign(g),
        None => *sum = Some(g.clone()),
    }
}

/// FRPG worker step; returns `g_{n,k}`.
pub fn frpg_worker_step(
    state: &mut WorkerState,
    ctx: &StepContext<'_>,
    k: usize,
    w0k: &ModelVector,
    batch: &[usize],
) -> Result<ModelVector> {
    state.frpg_step(ctx, k, w0k, batch)
}

/// LFRPG worker slot; `Some(frame average)` after the last slot.
pub fn lfrpg_worker_slot(
    state: &mut WorkerState,
    ctx: &StepContext<'_>,
    i: usize,
    k: usize,
    w0i: &ModelVector,
    batch: &[usize],
) -> Result<Option<ModelVector>> {
    state.lfrpg_slot(ctx, i, k, w0i, batch)
}

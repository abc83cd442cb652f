//! Parameter-server side of FRPG / LFRPG.
//!
//! Each round (FRPG slot or LFRPG frame) is split into `begin`, which
//! extrapolates and broadcasts a model, and `end`, which folds the uploaded
//! penalty gradients into the auxiliary sequence `v`.

use super::schedule::{Participant, Schedule};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::vector::ModelVector;

/// Bound the server enforces on the sum of uploads: `‖Σ g‖ ≤ Q λ √G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UploadCap {
    pub workers: usize,
    pub lambda: f64,
    pub gradient_power: f64,
}

impl UploadCap {
    pub fn per_upload(&self) -> f64 {
        self.lambda * self.gradient_power.sqrt()
    }

    pub fn total(&self) -> f64 {
        self.workers as f64 * self.per_upload()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub u: ModelVector,
    pub w: ModelVector,
    pub v: ModelVector,
    /// Last completed round.
    pub index: usize,
    /// `∇f₀(u)` of the round in flight; `Some` between `begin` and `end`.
    pending_grad: Option<ModelVector>,
}

impl ServerState {
    /// Zero-initialized state.
    pub fn new(dim: usize) -> Self {
        ServerState {
            u: ModelVector::zeros(dim),
            w: ModelVector::zeros(dim),
            v: ModelVector::zeros(dim),
            index: 0,
            pending_grad: None,
        }
    }

    pub fn with_initial(w: ModelVector, v: ModelVector) -> Self {
        ServerState {
            u: w.clone(),
            w,
            v,
            index: 0,
            pending_grad: None,
        }
    }

    /// `u = (1−β)w + βv`, `w = u − ∇f₀(u)/α₀`; returns `w` for broadcast.
    pub fn begin(&mut self, k: usize, sched: &Schedule, f0: &LossSpec) -> Result<ModelVector> {
        if self.pending_grad.is_some() || k != self.index + 1 {
            return Err(Error::Protocol(format!(
                "server begin({k}) out of order after round {}",
                self.index
            )));
        }
        let beta = sched.beta(k)?;
        let alpha = sched.alpha(Participant::Server, k)?;
        let u = ModelVector::convex(&self.w, &self.v, beta);
        let grad = f0.full_grad(&u)?;
        let mut w = u.clone();
        w.axpy(-1.0 / alpha, &grad);
        w.ensure_finite("server model")?;
        self.u = u;
        self.w = w;
        self.pending_grad = Some(grad);
        Ok(self.w.clone())
    }

    /// Folds the uploads (summed in slice order) into `v`; returns `Σ g`.
    pub fn end(
        &mut self,
        k: usize,
        sched: &Schedule,
        uploads: &[ModelVector],
        cap: UploadCap,
    ) -> Result<ModelVector> {
        if k != self.index + 1 {
            return Err(Error::Protocol(format!(
                "server end({k}) does not match round {}",
                self.index + 1
            )));
        }
        let grad = self
            .pending_grad
            .take()
            .ok_or_else(|| Error::Protocol(format!("server end({k}) without begin")))?;
        if uploads.len() != cap.workers {
            self.pending_grad = Some(grad);
            return Err(Error::Protocol(format!(
                "expected {} uploads, got {}",
                cap.workers,
                uploads.len()
            )));
        }
        let sum = ModelVector::sum_ordered(uploads)
            .ok_or_else(|| Error::Protocol("no uploads".into()))?;
        let norm = sum.norm();
        if !(norm <= cap.total() * (1.0 + 1e-9)) {
            return Err(Error::Protocol(format!(
                "upload sum norm {norm} exceeds cap {}",
                cap.total()
            )));
        }
        let beta = sched.beta(k)?;
        let alpha = sched.alpha(Participant::Server, k)?;
        let delta = sched.delta0;
        let denom = delta + alpha * beta;
        let mut v = self.v.clone();
        for i in 0..v.dim() {
            let num = delta * (self.v[i] - self.u[i]) + grad[i] + sum[i];
            v[i] = self.v[i] - num / denom;
        }
        v.ensure_finite("server auxiliary v")?;
        self.v = v;
        self.index = k;
        Ok(sum)
    }
}

/// Begin of an FRPG slot; returns the broadcast `w_{0,k}`.
pub fn frpg_server_begin(
    state: &mut ServerState,
    k: usize,
    sched: &Schedule,
    f0: &LossSpec,
) -> Result<ModelVector> {
    state.begin(k, sched, f0)
}

/// End of an FRPG slot.
pub fn frpg_server_end(
    state: &mut ServerState,
    k: usize,
    sched: &Schedule,
    uploads: &[ModelVector],
    cap: UploadCap,
) -> Result<ModelVector> {
    state.end(k, sched, uploads, cap)
}

/// Begin of LFRPG frame `i`: same recursion as an FRPG slot, indexed by frame.
pub fn lfrpg_server_frame_begin(
    state: &mut ServerState,
    i: usize,
    sched: &Schedule,
    f0: &LossSpec,
) -> Result<ModelVector> {
    state.begin(i, sched, f0)
}

/// End of LFRPG frame `i`; `averaged_uploads` are the per-worker frame means.
pub fn lfrpg_server_frame_end(
    state: &mut ServerState,
    i: usize,
    sched: &Schedule,
    averaged_uploads: &[ModelVector],
    cap: UploadCap,
) -> Result<ModelVector> {
    state.end(i, sched, averaged_uploads, cap)
}

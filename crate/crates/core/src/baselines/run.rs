//! Round driver for the comparison methods, producing the same telemetry as
//! the FRPG runners.

use rayon::prelude::*;

use super::rsa::{rsa_server_update, rsa_worker_update, signed_gap, RsaState};
use super::{baseline_step, geomed_weiszfeld, krum_select, AggregationRule};
use crate::adversary::{faulty_upload, gaussian_model, Behavior, Protocol};
use crate::algorithms::{RoundOutcome, RoundRunner};
use crate::data::sample_minibatch;
use crate::error::Result;
use crate::harness::MetricsRecord;
use crate::penalty::PenaltySpec;
use crate::problem::Problem;
use crate::rng::{Purpose, StreamKey};
use crate::vector::ModelVector;

pub struct BaselineRunner<'a> {
    problem: &'a Problem,
    rule: AggregationRule,
    /// Server model plus per-worker models (the latter only move under RSA).
    state: RsaState,
    round: usize,
    geomed_trace: Vec<f64>,
}

impl<'a> BaselineRunner<'a> {
    pub fn new(problem: &'a Problem, rule: AggregationRule) -> Result<Self> {
        rule.validate(problem.params.workers)?;
        Ok(BaselineRunner {
            problem,
            rule,
            state: RsaState::new(problem.dim(), problem.params.workers),
            round: 0,
            geomed_trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &RsaState {
        &self.state
    }

    /// Weiszfeld objective trace of the latest GeoMed aggregation.
    pub fn geomed_trace(&self) -> &[f64] {
        &self.geomed_trace
    }

    fn batch(&self, n: usize, k: usize) -> Vec<usize> {
        let p = self.problem;
        let key = StreamKey::new(p.params.seed, Purpose::Minibatch, n, k, 1);
        sample_minibatch(p.workers[n].num_samples(), p.params.batch, key)
    }

    fn fabricated(&self, scale: f64, n: usize, k: usize) -> ModelVector {
        let key = StreamKey::new(self.problem.params.seed, Purpose::Attack, n, k, 1);
        gaussian_model(self.problem.dim(), scale, key)
    }

    fn rsa_step(&mut self, k: usize, lambda: f64, eta: f64) -> Result<Vec<ModelVector>> {
        let p = self.problem;
        let pen = PenaltySpec {
            mu: p.params.mu,
            weight: lambda,
        };
        let w0 = self.state.server.clone();
        let this = &*self;
        let results = self
            .state
            .workers
            .par_iter()
            .enumerate()
            .map(|(n, wn)| -> Result<(ModelVector, ModelVector)> {
                match p.behavior(n) {
                    Behavior::Honest => {
                        let g = p.workers[n].grad(wn, &this.batch(n, k))?;
                        Ok((
                            signed_gap(lambda, &w0, wn),
                            rsa_worker_update(wn, &g, &w0, lambda, eta),
                        ))
                    }
                    Behavior::Gaussian { scale } => {
                        let fab = this.fabricated(scale, n, k);
                        Ok((faulty_upload(Protocol::Rsa, &w0, &fab, &pen)?, fab))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (terms, workers): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let server = rsa_server_update(&w0, &p.server.full_grad(&w0)?, &terms, eta);
        server.ensure_finite("rsa server model")?;
        self.state.server = server;
        self.state.workers = workers;
        Ok(terms)
    }

    /// Uploads for the model- or gradient-sharing rules: honest workers send
    /// `w0 − η∇f(w0; x)` (`local_model`) or `∇f(w0; x)`.
    fn shared_uploads(
        &self,
        k: usize,
        eta: f64,
        local_model: bool,
        protocol: Protocol,
    ) -> Result<Vec<ModelVector>> {
        let p = self.problem;
        let w0 = &self.state.server;
        (0..p.params.workers)
            .into_par_iter()
            .map(|n| match p.behavior(n) {
                Behavior::Honest => {
                    let g = p.workers[n].grad(w0, &self.batch(n, k))?;
                    if local_model {
                        let mut m = w0.clone();
                        m.axpy(-eta, &g);
                        Ok(m)
                    } else {
                        Ok(g)
                    }
                }
                Behavior::Gaussian { scale } => {
                    faulty_upload(protocol, w0, &self.fabricated(scale, n, k), &p.penalty)
                }
            })
            .collect()
    }
}

impl RoundRunner for BaselineRunner<'_> {
    fn step(&mut self) -> Result<RoundOutcome> {
        let p = self.problem;
        let k = self.round + 1;
        let eta = baseline_step(self.rule.step_scale(), k);
        let uploads = match self.rule {
            AggregationRule::Rsa { lambda, .. } => self.rsa_step(k, lambda, eta)?,
            AggregationRule::Krum { assumed_faulty, .. } => {
                let ups = self.shared_uploads(k, eta, true, Protocol::Krum)?;
                let pick = krum_select(&ups, assumed_faulty)?;
                self.state.server = ups[pick].clone();
                ups
            }
            AggregationRule::GeoMed { tol, max_iter, .. } => {
                let ups = self.shared_uploads(k, eta, true, Protocol::GeoMed)?;
                let med = geomed_weiszfeld(&ups, tol, max_iter)?;
                self.state.server = med.point;
                self.geomed_trace = med.objective_trace;
                ups
            }
            AggregationRule::MeanSgd { .. } => {
                let ups = self.shared_uploads(k, eta, false, Protocol::MeanSgd)?;
                let mean = ModelVector::sum_ordered(&ups)
                    .expect("at least one worker")
                    .scale(1.0 / ups.len() as f64);
                let mut dir = p.server.full_grad(&self.state.server)?;
                dir.add_assign(&mean);
                self.state.server.axpy(-eta, &dir);
                ups
            }
        };
        self.state.server.ensure_finite("baseline server model")?;
        self.round = k;
        let record = match self.rule {
            AggregationRule::Rsa { .. } => {
                p.record(k, &self.state.server, &self.state.workers, &uploads)?
            }
            // no worker-side models: evaluate the consensus point
            _ => p.record_reliable(
                k,
                &self.state.server,
                &vec![self.state.server.clone(); p.reliable.len()],
                &uploads,
            )?,
        };
        Ok(RoundOutcome { record, uploads })
    }

    fn round(&self) -> usize {
        self.round
    }

    fn server_model(&self) -> &ModelVector {
        &self.state.server
    }
}

/// Runs `rule` for `problem.params.rounds` rounds.
pub fn run_baseline(problem: &Problem, rule: AggregationRule) -> Result<Vec<MetricsRecord>> {
    let mut runner = BaselineRunner::new(problem, rule)?;
    crate::algorithms::run_rounds(&mut runner, problem.params.rounds)
}

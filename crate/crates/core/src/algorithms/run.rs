//! Round orchestration for FRPG and LFRPG.
//!
//! The orchestration loop is sequential; inside a round the workers run in
//! parallel and their uploads are folded at the server in ascending worker
//! order, so results do not depend on thread scheduling.

use rayon::prelude::*;

use super::schedule::Schedule;
use super::server::{ServerState, UploadCap};
use super::worker::{accumulate, StepContext, WorkerState};
use crate::adversary::{faulty_upload, gaussian_model, Behavior, Protocol};
use crate::data::sample_minibatch;
use crate::error::Result;
use crate::harness::MetricsRecord;
use crate::problem::Problem;
use crate::rng::{Purpose, StreamKey};
use crate::vector::ModelVector;

/// What one communication round produced.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub record: MetricsRecord,
    /// Messages received by the server, indexed by worker.
    pub uploads: Vec<ModelVector>,
}

/// Anything that advances a problem one communication round at a time.
pub trait RoundRunner {
    fn step(&mut self) -> Result<RoundOutcome>;
    /// Last completed round.
    fn round(&self) -> usize;
    fn server_model(&self) -> &ModelVector;
}

fn batch_for(p: &Problem, worker: usize, round: usize, slot: usize) -> Vec<usize> {
    let key = StreamKey::new(p.params.seed, Purpose::Minibatch, worker, round, slot);
    sample_minibatch(p.workers[worker].num_samples(), p.params.batch, key)
}

fn fabricated(p: &Problem, scale: f64, worker: usize, round: usize, slot: usize) -> ModelVector {
    let key = StreamKey::new(p.params.seed, Purpose::Attack, worker, round, slot);
    gaussian_model(p.dim(), scale, key)
}

fn upload_cap(p: &Problem) -> UploadCap {
    UploadCap {
        workers: p.params.workers,
        lambda: p.params.lambda,
        gradient_power: p.penalty.gradient_power(),
    }
}

pub struct FrpgRunner<'a> {
    problem: &'a Problem,
    sched: Schedule,
    server: ServerState,
    workers: Vec<WorkerState>,
}

impl<'a> FrpgRunner<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let d = problem.dim();
        FrpgRunner {
            problem,
            sched: Schedule::from_params(&problem.params),
            server: ServerState::new(d),
            workers: (0..problem.params.workers)
                .map(|_| WorkerState::new(d, 1))
                .collect(),
        }
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }
}

impl RoundRunner for FrpgRunner<'_> {
    fn step(&mut self) -> Result<RoundOutcome> {
        let p = self.problem;
        let k = self.server.index + 1;
        let w0 = self.server.begin(k, &self.sched, &p.server)?;
        let sched = &self.sched;
        let uploads = self
            .workers
            .par_iter_mut()
            .enumerate()
            .map(|(n, st)| match p.behavior(n) {
                Behavior::Honest => {
                    let ctx = StepContext {
                        worker: n,
                        sched,
                        loss: &p.workers[n],
                        penalty: &p.penalty,
                    };
                    st.frpg_step(&ctx, k, &w0, &batch_for(p, n, k, 1))
                }
                Behavior::Gaussian { scale } => {
                    faulty_upload(Protocol::Frpg, &w0, &fabricated(p, scale, n, k, 1), &p.penalty)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.server.end(k, &self.sched, &uploads, upload_cap(p))?;
        let models: Vec<ModelVector> = self.workers.iter().map(|s| s.w.clone()).collect();
        let record = p.record(k, &self.server.w, &models, &uploads)?;
        Ok(RoundOutcome { record, uploads })
    }

    fn round(&self) -> usize {
        self.server.index
    }

    fn server_model(&self) -> &ModelVector {
        &self.server.w
    }
}

pub struct LfrpgRunner<'a> {
    problem: &'a Problem,
    sched: Schedule,
    server: ServerState,
    workers: Vec<WorkerState>,
}

impl<'a> LfrpgRunner<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let d = problem.dim();
        let t = problem.params.frame_len;
        LfrpgRunner {
            problem,
            sched: Schedule::from_params(&problem.params),
            server: ServerState::new(d),
            workers: (0..problem.params.workers)
                .map(|_| WorkerState::new(d, t))
                .collect(),
        }
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }
}

impl RoundRunner for LfrpgRunner<'_> {
    fn step(&mut self) -> Result<RoundOutcome> {
        let p = self.problem;
        let t = p.params.frame_len;
        let i = self.server.index + 1;
        let w0 = self.server.begin(i, &self.sched, &p.server)?;
        let sched = &self.sched;
        let uploads = self
            .workers
            .par_iter_mut()
            .enumerate()
            .map(|(n, st)| -> Result<ModelVector> {
                match p.behavior(n) {
                    Behavior::Honest => {
                        let ctx = StepContext {
                            worker: n,
                            sched,
                            loss: &p.workers[n],
                            penalty: &p.penalty,
                        };
                        let mut avg = None;
                        for k in 1..=t {
                            avg = st.lfrpg_slot(&ctx, i, k, &w0, &batch_for(p, n, i, k))?;
                        }
                        Ok(avg.expect("last slot closes the frame"))
                    }
                    Behavior::Gaussian { scale } => {
                        let mut sum = None;
                        for k in 1..=t {
                            let fab = fabricated(p, scale, n, i, k);
                            accumulate(&mut sum, &faulty_upload(Protocol::Lfrpg, &w0, &fab, &p.penalty)?);
                        }
                        Ok(sum.expect("frame has a slot").scale(1.0 / t as f64))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.server.end(i, &self.sched, &uploads, upload_cap(p))?;
        let models: Vec<ModelVector> = self.workers.iter().map(WorkerState::frame_mean).collect();
        let record = p.record(i, &self.server.w, &models, &uploads)?;
        Ok(RoundOutcome { record, uploads })
    }

    fn round(&self) -> usize {
        self.server.index
    }

    fn server_model(&self) -> &ModelVector {
        &self.server.w
    }
}

/// Runs `runner` for `rounds` rounds and collects the records.
pub fn run_rounds(runner: &mut dyn RoundRunner, rounds: usize) -> Result<Vec<MetricsRecord>> {
    (0..rounds).map(|_| runner.step().map(|o| o.record)).collect()
}

/// FRPG for `problem.params.rounds` slots.
pub fn run_frpg(problem: &Problem) -> Result<Vec<MetricsRecord>> {
    run_rounds(&mut FrpgRunner::new(problem), problem.params.rounds)
}

/// LFRPG for `problem.params.rounds` frames of `frame_len` slots.
pub fn run_lfrpg(problem: &Problem) -> Result<Vec<MetricsRecord>> {
    run_rounds(&mut LfrpgRunner::new(problem), problem.params.rounds)
}

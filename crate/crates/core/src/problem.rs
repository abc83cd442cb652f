//! A fully assembled federated problem: losses for the server and every
//! worker, who is faulty, and the data used for evaluation.

use std::sync::Arc;

use crate::adversary::{AttackSpec, Behavior};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::{HyperParams, MetricsRecord};
use crate::loss::{accuracy, LossSpec};
use crate::objective::Objective;
use crate::penalty::PenaltySpec;
use crate::vector::ModelVector;

#[derive(Debug, Clone)]
pub struct Problem {
    pub params: HyperParams,
    pub penalty: PenaltySpec,
    pub server: LossSpec,
    /// One loss per worker. Label-flipping workers already hold their
    /// corrupted shard.
    pub workers: Vec<LossSpec>,
    pub attack: AttackSpec,
    /// Penalized objective over the reliable workers.
    pub objective: Objective,
    /// Zero-based indices of the reliable workers, ascending.
    pub reliable: Vec<usize>,
    pub train: Option<Arc<Dataset>>,
    pub test: Option<Arc<Dataset>>,
}

impl Problem {
    pub fn new(
        params: HyperParams,
        server: LossSpec,
        workers: Vec<LossSpec>,
        attack: AttackSpec,
        train: Option<Arc<Dataset>>,
        test: Option<Arc<Dataset>>,
    ) -> Result<Self> {
        params.validate()?;
        attack.validate(params.workers)?;
        if workers.len() != params.workers {
            return Err(Error::Config(format!(
                "{} worker losses for Q = {}",
                workers.len(),
                params.workers
            )));
        }
        if attack.faulty.len() != params.faulty() {
            return Err(Error::Config(format!(
                "attack lists {} faulty workers but Q - N = {}",
                attack.faulty.len(),
                params.faulty()
            )));
        }
        let d = server.dim();
        if let Some(bad) = workers.iter().find(|l| l.dim() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: bad.dim(),
            });
        }
        let penalty = PenaltySpec::huber(params.mu, params.lambda)?;
        let reliable: Vec<usize> = (0..params.workers).filter(|&n| !attack.is_faulty(n)).collect();
        let objective = Objective::new(
            server.clone(),
            reliable.iter().map(|&n| workers[n].clone()).collect(),
            penalty,
        );
        Ok(Problem {
            params,
            penalty,
            server,
            workers,
            attack,
            objective,
            reliable,
            train,
            test,
        })
    }

    pub fn dim(&self) -> usize {
        self.server.dim()
    }

    pub fn behavior(&self, worker: usize) -> Behavior {
        self.attack.behavior(worker)
    }

    /// Evaluates the round's telemetry. `models` holds one model per worker
    /// (faulty entries are ignored).
    pub fn record(
        &self,
        round: usize,
        w0: &ModelVector,
        models: &[ModelVector],
        uploads: &[ModelVector],
    ) -> Result<MetricsRecord> {
        let reliable: Vec<ModelVector> = self.reliable.iter().map(|&n| models[n].clone()).collect();
        self.record_reliable(round, w0, &reliable, uploads)
    }

    /// As [`Problem::record`], with models given for reliable workers only.
    pub fn record_reliable(
        &self,
        round: usize,
        w0: &ModelVector,
        reliable_models: &[ModelVector],
        uploads: &[ModelVector],
    ) -> Result<MetricsRecord> {
        let loss_f = self.objective.value(w0, reliable_models)?;
        if !loss_f.is_finite() {
            return Err(Error::NonFinite(format!("objective is {loss_f} at round {round}")));
        }
        let acc = |ds: &Option<Arc<Dataset>>| match ds {
            Some(ds) => accuracy(ds, w0),
            None => Ok(f64::NAN),
        };
        let norm_of_sum = |vs: Vec<&ModelVector>| {
            let mut it = vs.into_iter();
            match it.next() {
                None => 0.0,
                Some(first) => {
                    let mut s = first.clone();
                    for v in it {
                        s.add_assign(v);
                    }
                    s.norm()
                }
            }
        };
        Ok(MetricsRecord {
            round,
            loss_f,
            train_acc: acc(&self.train)?,
            test_acc: acc(&self.test)?,
            sum_g_norm: norm_of_sum(uploads.iter().collect()),
            delta0_norm: norm_of_sum(
                (0..uploads.len())
                    .filter(|&n| self.attack.is_faulty(n))
                    .map(|n| &uploads[n])
                    .collect(),
            ),
            wall_ms: 0,
        })
    }
}

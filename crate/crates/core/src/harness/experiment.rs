//! Turns a [`RunConfig`] into a [`Problem`], runs it, and persists the
//! telemetry.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use super::config::{AlgorithmName, AttackName, DataKind, RunConfig};
use super::metrics::{MetricsRecord, MetricsWriter};
use super::params::HyperParams;
use crate::adversary::{corrupt_labels, AttackKind, AttackSpec};
use crate::algorithms::{FrpgRunner, LfrpgRunner, RoundRunner};
use crate::baselines::{AggregationRule, BaselineRunner};
use crate::data::{
    load_csv, load_idx, partition_heterogeneous, partition_iid, synth_quadratic, BatchSpec, Dataset,
    PartitionOptions, ShardAssignment, SyntheticInstance, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::loss::{per_sample_lipschitz_bound, LogisticLoss, LossSpec, QuadraticLoss};
use crate::penalty::PenaltySpec;
use crate::problem::Problem;

/// A problem ready to run, plus the fully resolved config that produced it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub problem: Problem,
    /// Present for synthetic problems: the exact optimum.
    pub synthetic: Option<SyntheticInstance>,
    pub assignment: Option<ShardAssignment>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rounds: usize,
    pub metrics_path: PathBuf,
    pub resolved_path: PathBuf,
    pub last: MetricsRecord,
}

fn attack_spec(cfg: &RunConfig) -> AttackSpec {
    let kind = match cfg.attack.kind {
        AttackName::None => AttackKind::None,
        AttackName::LabelFlip => AttackKind::LabelFlip,
        AttackName::Gaussian => AttackKind::Gaussian {
            scale: cfg.attack.scale,
        },
    };
    let faulty = cfg.attack.faulty.clone().unwrap_or_else(|| {
        let q = cfg.hyper.workers;
        (cfg.hyper.reliable..q).collect()
    });
    AttackSpec { kind, faulty }
}

fn hyper_params(cfg: &RunConfig) -> Result<HyperParams> {
    let h = &cfg.hyper;
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| Error::Config(format!("hyper.{key} unresolved")))
    };
    let delta = need(h.delta, "delta")?;
    let lipschitz = need(h.lipschitz, "lipschitz")?;
    let frame_len = match cfg.algorithm.name {
        AlgorithmName::Lfrpg => cfg.algorithm.frame_len,
        _ => 1,
    };
    let batch = if h.full_batch {
        BatchSpec::Full
    } else {
        BatchSpec::Sampled(h.batch_size.unwrap_or(15))
    };
    let params = HyperParams {
        lambda: h.lambda,
        mu: h.mu,
        delta0: need(h.delta0, "delta0")?,
        lipschitz0: need(h.lipschitz0, "lipschitz0")?,
        delta: vec![delta; h.workers],
        lipschitz: vec![lipschitz; h.workers],
        workers: h.workers,
        reliable: h.reliable,
        frame_len,
        rounds: cfg.algorithm.rounds,
        batch,
        sigma: h.sigma.clone(),
        seed: h.seed,
    };
    params.validate()?;
    Ok(params)
}

fn truncate(ds: Dataset, max: Option<usize>) -> Dataset {
    match max {
        Some(m) if m < ds.len() => ds.truncated(m),
        _ => ds,
    }
}

fn load_data(cfg: &RunConfig) -> Result<(Dataset, Option<Dataset>)> {
    let d = &cfg.data;
    let missing = |key: &str| Error::Config(format!("data.{key} is required"));
    let (train, test) = match d.kind {
        DataKind::Idx => {
            let train = load_idx(
                d.train_images.as_ref().ok_or_else(|| missing("train_images"))?,
                d.train_labels.as_ref().ok_or_else(|| missing("train_labels"))?,
            )?;
            let test = match (&d.test_images, &d.test_labels) {
                (Some(i), Some(l)) => Some(load_idx(i, l)?),
                _ => None,
            };
            (train, test)
        }
        DataKind::Csv => {
            let train = load_csv(
                d.train_csv.as_ref().ok_or_else(|| missing("train_csv"))?,
                &d.feature_cols,
                d.label_col,
            )?;
            let test = match &d.test_csv {
                Some(p) => Some(load_csv(p, &d.feature_cols, d.label_col)?),
                None => None,
            };
            (train, test)
        }
        DataKind::Synthetic => unreachable!("synthetic problems have no files"),
    };
    let train = truncate(train, d.max_train_samples);
    let test = test.map(|t| truncate(t, d.max_test_samples));
    // class count must agree between the splits for the weight layout
    let classes = train.classes().max(test.as_ref().map_or(0, Dataset::classes));
    let train = train.with_classes(classes)?;
    let test = test.map(|t| t.with_classes(classes)).transpose()?;
    if let Some(t) = &test {
        if t.num_features() != train.num_features() {
            return Err(Error::Data(format!(
                "train has {} features but test has {}",
                train.num_features(),
                t.num_features()
            )));
        }
    }
    Ok((train, test))
}

/// Loads data, partitions it, applies the attack and fills data-dependent
/// defaults into the returned config.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    let attack = attack_spec(&cfg);
    attack.validate(cfg.hyper.workers)?;

    if cfg.data.kind == DataKind::Synthetic {
        let params = hyper_params(&cfg)?;
        let penalty = PenaltySpec::huber(params.mu, params.lambda)?;
        let spec = SyntheticSpec {
            dim: cfg.data.dim,
            delta: cfg.data.synthetic_delta,
            lipschitz: cfg.data.synthetic_lipschitz,
            center_scale: cfg.data.center_scale,
            seed: cfg.data.synthetic_seed.unwrap_or(params.seed),
        };
        let inst = synth_quadratic_with_faulty(spec, &params, &attack, penalty)?;
        let workers = inst.workers.iter().cloned().map(LossSpec::Quadratic).collect();
        let server = LossSpec::Quadratic(inst.server.clone());
        let problem = Problem::new(params, server, workers, attack, None, None)?;
        return Ok(Prepared {
            config: cfg,
            problem,
            synthetic: Some(inst),
            assignment: None,
        });
    }

    let (train, test) = load_data(&cfg)?;
    let q = cfg.hyper.workers;
    let partition_seed = cfg.data.partition_seed.unwrap_or(cfg.hyper.seed);
    let assignment = if cfg.data.heterogeneous {
        partition_heterogeneous(
            &train,
            PartitionOptions {
                workers: q,
                seed: partition_seed,
                remove_upper_labels: cfg.data.remove_upper_labels,
            },
        )?
    } else {
        partition_iid(&train, q, partition_seed)?
    };
    let delta = cfg.hyper.delta.expect("static default");
    let mut shards = Vec::with_capacity(q);
    for n in 0..q {
        let shard = train.subset(assignment.shard(n));
        let shard = match attack.kind {
            AttackKind::LabelFlip if attack.is_faulty(n) => corrupt_labels(&shard, train.classes())?,
            _ => shard,
        };
        shards.push(Arc::new(shard));
    }
    if cfg.hyper.lipschitz.is_none() {
        let l = shards
            .iter()
            .map(|s| per_sample_lipschitz_bound(s, delta))
            .fold(0.0, f64::max);
        cfg.hyper.lipschitz = Some(l);
    }
    if cfg.hyper.lipschitz0.is_none() {
        cfg.hyper.lipschitz0 = cfg.hyper.lipschitz;
    }
    let params = hyper_params(&cfg)?;
    let workers = shards
        .into_iter()
        .map(|s| LogisticLoss::new(s, delta).map(LossSpec::MultinomialLogistic))
        .collect::<Result<Vec<_>>>()?;
    let dim = train.classes() * train.num_features();
    let server = LossSpec::Quadratic(QuadraticLoss::ridge(dim, params.delta0)?);
    let problem = Problem::new(
        params,
        server,
        workers,
        attack,
        Some(Arc::new(train)),
        test.map(Arc::new),
    )?;
    Ok(Prepared {
        config: cfg,
        problem,
        synthetic: None,
        assignment: Some(assignment),
    })
}

/// Synthetic instance whose optimum is taken over the non-faulty workers.
fn synth_quadratic_with_faulty(
    spec: SyntheticSpec,
    params: &HyperParams,
    attack: &AttackSpec,
    penalty: PenaltySpec,
) -> Result<SyntheticInstance> {
    // the generator treats the first N workers as reliable; reorder its
    // output so that the configured faulty indices get the trailing losses
    let inst = synth_quadratic(spec, params.workers, params.reliable, params.delta0, penalty)?;
    let mut reliable_iter = inst.workers[..params.reliable].iter();
    let mut faulty_iter = inst.workers[params.reliable..].iter();
    let workers = (0..params.workers)
        .map(|n| {
            let src = if attack.is_faulty(n) {
                faulty_iter.next()
            } else {
                reliable_iter.next()
            };
            src.cloned().expect("counts match")
        })
        .collect();
    Ok(SyntheticInstance { workers, ..inst })
}

/// The round driver for the configured algorithm.
pub fn make_runner(prepared: &Prepared) -> Result<Box<dyn RoundRunner + '_>> {
    let p = &prepared.problem;
    let a = &prepared.config.algorithm;
    let rule = match a.name {
        AlgorithmName::Frpg => return Ok(Box::new(FrpgRunner::new(p))),
        AlgorithmName::Lfrpg => return Ok(Box::new(LfrpgRunner::new(p))),
        AlgorithmName::Rsa => AggregationRule::Rsa {
            lambda: a.rsa_lambda.unwrap_or(p.params.lambda),
            step_scale: a.step_scale,
        },
        AlgorithmName::Krum => AggregationRule::Krum {
            assumed_faulty: a.krum_assumed_faulty.unwrap_or(p.params.faulty()),
            step_scale: a.step_scale,
        },
        AlgorithmName::Geomed => AggregationRule::GeoMed {
            tol: a.geomed_tol,
            max_iter: a.geomed_max_iter,
            step_scale: a.step_scale,
        },
        AlgorithmName::Sgd => AggregationRule::MeanSgd {
            step_scale: a.step_scale,
        },
    };
    Ok(Box::new(BaselineRunner::new(p, rule)?))
}

/// Runs every round, handing each record to `sink` as soon as it exists.
pub fn run_prepared(
    prepared: &Prepared,
    mut sink: impl FnMut(&MetricsRecord) -> Result<()>,
) -> Result<()> {
    let mut runner = make_runner(prepared)?;
    let start = Instant::now();
    for _ in 0..prepared.problem.params.rounds {
        let mut rec = runner.step()?.record;
        if prepared.config.output.wall_clock {
            rec.wall_ms = start.elapsed().as_millis() as u64;
        }
        sink(&rec)?;
    }
    Ok(())
}

/// Runs the configured experiment, streaming metrics to
/// `output.metrics` and writing the resolved config next to it.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    let prepared = prepare(cfg)?;
    let metrics_path = prepared.config.output.metrics.clone();
    let resolved_path = prepared.config.resolved_path();
    if let Some(dir) = resolved_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&resolved_path, prepared.config.to_toml()?)
        .map_err(|e| Error::io(&resolved_path, e))?;
    let mut writer = MetricsWriter::create(&metrics_path)?;
    let mut last = None;
    run_prepared(&prepared, |r| {
        last = Some(*r);
        writer.write(r)
    })?;
    writer.finish()?;
    Ok(RunSummary {
        rounds: prepared.problem.params.rounds,
        metrics_path,
        resolved_path,
        last: last.expect("rounds >= 1"),
    })
}

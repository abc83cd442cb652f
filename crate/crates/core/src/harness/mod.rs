//! Configuration, experiment orchestration, bound calculators and metrics.

pub mod bounds;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod params;

pub use bounds::{
    compute_frpg_bound, compute_lfrpg_bound, estimate_sigma, frpg_eta10, frpg_eta9, lfrpg_etas,
    BoundConstants, BoundCurve,
};
pub use config::{parse_config, stock_lipschitz, AlgorithmName, AttackName, DataKind, RunConfig};
pub use experiment::{make_runner, prepare, run_experiment, run_prepared, Prepared, RunSummary};
pub use metrics::{read_metrics, write_metrics, MetricsRecord, MetricsWriter, METRICS_HEADER};
pub use params::HyperParams;

//! TOML run configuration.
//!
//! Unset keys are filled in two passes: [`parse_config`] applies the static
//! defaults, and experiment preparation fills in data-dependent ones
//! (Lipschitz constants). The fully resolved config serializes back to TOML
//! and reproduces the same run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    Frpg,
    Lfrpg,
    Rsa,
    Krum,
    Geomed,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: AlgorithmName,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Slots per LFRPG frame.
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    /// `c₀` of the baseline step size `c₀/√k`.
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    /// RSA penalty weight; defaults to `hyper.lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsa_lambda: Option<f64>,
    /// Defaults to the true number of faulty workers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub krum_assumed_faulty: Option<usize>,
    #[serde(default = "default_geomed_tol")]
    pub geomed_tol: f64,
    #[serde(default = "default_geomed_max_iter")]
    pub geomed_max_iter: usize,
}

fn default_rounds() -> usize {
    1000
}
fn default_frame_len() -> usize {
    10
}
fn default_step_scale() -> f64 {
    3.0
}
fn default_geomed_tol() -> f64 {
    1e-7
}
fn default_geomed_max_iter() -> usize {
    1000
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Idx,
    Csv,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    /// Dataset name; `usps`, `mnist` and `fmnist` select stock Lipschitz
    /// constants, anything else gets an estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_csv: Option<PathBuf>,
    /// Empty means every column except the label.
    #[serde(default)]
    pub feature_cols: Vec<usize>,
    #[serde(default)]
    pub label_col: usize,
    /// Keep only the first rows of the training / test set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_test_samples: Option<usize>,
    #[serde(default = "default_true")]
    pub heterogeneous: bool,
    #[serde(default = "default_true")]
    pub remove_upper_labels: bool,
    /// Defaults to `hyper.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition_seed: Option<u64>,
    #[serde(default = "default_synth_dim")]
    pub dim: usize,
    #[serde(default = "default_synth_delta")]
    pub synthetic_delta: f64,
    #[serde(default = "default_synth_lipschitz")]
    pub synthetic_lipschitz: f64,
    #[serde(default = "default_center_scale")]
    pub center_scale: f64,
    /// Defaults to `hyper.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_seed: Option<u64>,
}

fn default_synth_dim() -> usize {
    20
}
fn default_synth_delta() -> f64 {
    0.5
}
fn default_synth_lipschitz() -> f64 {
    4.0
}
fn default_center_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Worker strong-convexity δₙ (uniform).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Defaults to `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    /// Worker Lipschitz constant Lₙ (uniform).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Defaults to `lipschitz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz0: Option<f64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_reliable")]
    pub reliable: usize,
    /// Defaults to 10 under the Gaussian attack and 15 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub full_batch: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

fn default_lambda() -> f64 {
    1.6
}
fn default_mu() -> f64 {
    1e-3
}
fn default_workers() -> usize {
    20
}
fn default_reliable() -> usize {
    16
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            lambda: default_lambda(),
            mu: default_mu(),
            delta: None,
            delta0: None,
            lipschitz: None,
            lipschitz0: None,
            workers: default_workers(),
            reliable: default_reliable(),
            batch_size: None,
            full_batch: false,
            seed: 0,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackName {
    #[default]
    None,
    LabelFlip,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub kind: AttackName,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Zero-based faulty worker indices; defaults to the last `Q − N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faulty: Option<Vec<usize>>,
}

fn default_scale() -> f64 {
    1e4
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            kind: AttackName::None,
            scale: default_scale(),
            faulty: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_metrics")]
    pub metrics: PathBuf,
    /// Defaults to the metrics path with a `.resolved.toml` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_config: Option<PathBuf>,
    /// Record real elapsed time in `wall_ms`. Off by default so that metrics
    /// files are byte-identical across repeated runs.
    #[serde(default)]
    pub wall_clock: bool,
}

fn default_metrics() -> PathBuf {
    PathBuf::from("metrics.csv")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            metrics: default_metrics(),
            resolved_config: None,
            wall_clock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: AlgorithmConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Source text, kept for line numbers in diagnostics.
    #[serde(skip)]
    source: Option<String>,
}

/// 1-based line of `key` inside `[section]`, if present in `src`.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunConfig {
    /// Parses TOML text; relative paths (data and output) are resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.source = Some(text.to_string());
        if let Some(base) = base_dir {
            // `Path::parent` of a bare file name is the empty path
            let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
            let base = std::path::absolute(base).map_err(|e| Error::io(base, e))?;
            cfg.rebase_paths(&base);
        }
        cfg.apply_static_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.output.resolved_config);
        if self.output.metrics.is_relative() {
            self.output.metrics = base.join(&self.output.metrics);
        }
        let d = &mut self.data;
        for p in [
            &mut d.train_images,
            &mut d.train_labels,
            &mut d.test_images,
            &mut d.test_labels,
            &mut d.train_csv,
            &mut d.test_csv,
        ] {
            fix(p);
        }
    }

    fn apply_static_defaults(&mut self) {
        let h = &mut self.hyper;
        let synthetic = self.data.kind == DataKind::Synthetic;
        if h.delta.is_none() {
            h.delta = Some(if synthetic { self.data.synthetic_delta } else { 0.003 });
        }
        if h.delta0.is_none() {
            h.delta0 = h.delta;
        }
        if h.lipschitz.is_none() {
            if synthetic {
                h.lipschitz = Some(self.data.synthetic_lipschitz);
            } else if let Some(l) = self.data.name.as_deref().and_then(stock_lipschitz) {
                h.lipschitz = Some(l);
            }
        }
        // the server shares the workers' constant; data-dependent values are
        // filled in once the shards exist
        if h.lipschitz0.is_none() {
            h.lipschitz0 = h.lipschitz;
        }
        if h.batch_size.is_none() {
            h.batch_size = Some(match self.attack.kind {
                AttackName::Gaussian => 10,
                _ => 15,
            });
        }
        let faulty = h.workers.saturating_sub(h.reliable);
        if self.attack.faulty.is_none() {
            self.attack.faulty = Some((h.workers - faulty..h.workers).collect());
        }
        if self.algorithm.krum_assumed_faulty.is_none() {
            self.algorithm.krum_assumed_faulty = Some(faulty);
        }
        if self.algorithm.rsa_lambda.is_none() {
            self.algorithm.rsa_lambda = Some(h.lambda);
        }
        if self.data.partition_seed.is_none() {
            self.data.partition_seed = Some(h.seed);
        }
        if synthetic && self.data.synthetic_seed.is_none() {
            self.data.synthetic_seed = Some(h.seed);
        }
    }

    fn err(&self, section: &str, key: &str, msg: String) -> Error {
        match self.source.as_deref().and_then(|s| locate(s, section, key)) {
            Some(line) => Error::Config(format!("line {line}: {section}.{key}: {msg}")),
            None => Error::Config(format!("{section}.{key}: {msg}")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        if h.workers == 0 {
            return Err(self.err("hyper", "workers", "Q must be at least 1".into()));
        }
        if h.reliable > h.workers {
            return Err(self.err(
                "hyper",
                "reliable",
                format!(
                    "N = {} exceeds Q = {} (constraint N <= Q)",
                    h.reliable, h.workers
                ),
            ));
        }
        for (key, v) in [
            ("lambda", Some(h.lambda)),
            ("mu", Some(h.mu)),
            ("delta", h.delta),
            ("delta0", h.delta0),
            ("lipschitz", h.lipschitz),
            ("lipschitz0", h.lipschitz0),
        ] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(self.err("hyper", key, format!("must be positive, got {x}")));
                }
            }
        }
        if h.batch_size == Some(0) {
            return Err(self.err("hyper", "batch_size", "must be at least 1".into()));
        }
        let a = &self.algorithm;
        if a.rounds == 0 {
            return Err(self.err("algorithm", "rounds", "must be at least 1".into()));
        }
        if a.frame_len == 0 {
            return Err(self.err("algorithm", "frame_len", "T must be at least 1".into()));
        }
        if !(a.step_scale > 0.0 && a.step_scale.is_finite()) {
            return Err(self.err("algorithm", "step_scale", "must be positive".into()));
        }
        if a.name == AlgorithmName::Krum {
            let b = a.krum_assumed_faulty.unwrap_or(0);
            if h.workers < b + 3 {
                return Err(self.err(
                    "algorithm",
                    "krum_assumed_faulty",
                    format!("needs Q - b - 2 >= 1 (Q = {}, b = {b})", h.workers),
                ));
            }
        }
        let at = &self.attack;
        if !(at.scale >= 0.0 && at.scale.is_finite()) {
            return Err(self.err("attack", "scale", format!("must be >= 0, got {}", at.scale)));
        }
        if let Some(f) = &at.faulty {
            if f.len() != h.workers - h.reliable {
                return Err(self.err(
                    "attack",
                    "faulty",
                    format!("lists {} workers but Q - N = {}", f.len(), h.workers - h.reliable),
                ));
            }
            if let Some(bad) = f.iter().find(|&&n| n >= h.workers) {
                return Err(self.err("attack", "faulty", format!("index {bad} outside 0..{}", h.workers)));
            }
        }
        let d = &self.data;
        match d.kind {
            DataKind::Idx => {
                for (key, p) in [("train_images", &d.train_images), ("train_labels", &d.train_labels)] {
                    if p.is_none() {
                        return Err(self.err("data", key, "required for kind = \"idx\"".into()));
                    }
                }
                if d.test_images.is_some() != d.test_labels.is_some() {
                    return Err(self.err(
                        "data",
                        "test_images",
                        "test_images and test_labels go together".into(),
                    ));
                }
            }
            DataKind::Csv => {
                if d.train_csv.is_none() {
                    return Err(self.err("data", "train_csv", "required for kind = \"csv\"".into()));
                }
            }
            DataKind::Synthetic => {
                if d.dim == 0 {
                    return Err(self.err("data", "dim", "must be at least 1".into()));
                }
                if !(d.synthetic_delta > 0.0 && d.synthetic_delta <= d.synthetic_lipschitz) {
                    return Err(self.err(
                        "data",
                        "synthetic_delta",
                        "needs 0 < synthetic_delta <= synthetic_lipschitz".into(),
                    ));
                }
            }
        }
        if d.kind != DataKind::Synthetic && d.heterogeneous && !h.workers.is_multiple_of(2) {
            return Err(self.err(
                "hyper",
                "workers",
                format!("heterogeneous partitioning pairs workers; Q = {} is odd", h.workers),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Where the resolved config goes.
    pub fn resolved_path(&self) -> PathBuf {
        self.output
            .resolved_config
            .clone()
            .unwrap_or_else(|| self.output.metrics.with_extension("resolved.toml"))
    }
}

/// Stock Lipschitz constants for the named image datasets.
pub fn stock_lipschitz(name: &str) -> Option<f64> {
    match name.to_ascii_lowercase().as_str() {
        "usps" => Some(156.0),
        "mnist" => Some(295.0),
        "fmnist" | "fashion-mnist" => Some(524.0),
        _ => None,
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml_str(&text, path.parent())
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
}

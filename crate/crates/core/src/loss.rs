//! Local losses: regularized multinomial logistic regression and quadratics.

use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::vector::ModelVector;

/// Softmax cross-entropy over a data shard plus `(reg/2)‖w‖²`.
///
/// Weights are class-major: `w[c * features + j]`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    data: Arc<Dataset>,
    reg: f64,
}

/// `½ (w − b)ᵀ A (w − b)` with symmetric positive-definite `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    a: Vec<f64>,
    b: ModelVector,
    lambda_min: f64,
    lambda_max: f64,
}

#[derive(Debug, Clone)]
pub enum LossSpec {
    MultinomialLogistic(LogisticLoss),
    Quadratic(QuadraticLoss),
}

impl LogisticLoss {
    pub fn new(data: Arc<Dataset>, reg: f64) -> Result<Self> {
        if !(reg >= 0.0 && reg.is_finite()) {
            return Err(Error::Config(format!("regularizer must be >= 0, got {reg}")));
        }
        if data.is_empty() {
            return Err(Error::Data("logistic loss over an empty shard".into()));
        }
        Ok(LogisticLoss { data, reg })
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    pub fn dim(&self) -> usize {
        self.data.classes() * self.data.num_features()
    }

    fn scores(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        let p = x.len();
        for (c, s) in out.iter_mut().enumerate() {
            *s = w[c * p..(c + 1) * p].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn eval(&self, w: &ModelVector, batch: &[usize], want_grad: bool) -> (f64, Option<ModelVector>) {
        let classes = self.data.classes();
        let p = self.data.num_features();
        let mut scores = vec![0.0; classes];
        let mut grad = want_grad.then(|| vec![0.0; w.dim()]);
        let mut total = 0.0;
        for &i in batch {
            let x = self.data.row(i);
            let y = self.data.label(i);
            self.scores(w, x, &mut scores);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            let lse = max + sum.ln();
            total += lse - scores[y];
            if let Some(g) = grad.as_mut() {
                for c in 0..classes {
                    let prob = (scores[c] - lse).exp();
                    let coef = prob - if c == y { 1.0 } else { 0.0 };
                    for (gj, xj) in g[c * p..(c + 1) * p].iter_mut().zip(x) {
                        *gj += coef * xj;
                    }
                }
            }
        }
        let inv = 1.0 / batch.len() as f64;
        let value = total * inv + 0.5 * self.reg * w.norm_sq();
        let grad = grad.map(|mut g| {
            for (gj, wj) in g.iter_mut().zip(w.iter()) {
                *gj = *gj * inv + self.reg * wj;
            }
            ModelVector::from_vec(g)
        });
        (value, grad)
    }

    /// `¼ λ_max(XᵀX) / m + reg` over the whole shard, by power iteration.
    pub fn lipschitz_estimate(&self) -> f64 {
        lipschitz_estimate(&self.data, self.reg)
    }
}

/// `½ maxᵢ ‖xᵢ‖² + reg`: a smoothness constant valid for the loss on every
/// subset of the rows of `ds`, mini-batches included.
pub fn per_sample_lipschitz_bound(ds: &Dataset, reg: f64) -> f64 {
    let top = (0..ds.len())
        .map(|i| ds.row(i).iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max);
    0.5 * top + reg
}

/// `¼ λ_max(XᵀX) / m + reg` for the rows of `ds`.
pub fn lipschitz_estimate(ds: &Dataset, reg: f64) -> f64 {
    let p = ds.num_features();
    let m = ds.len() as f64;
    let top = linalg::power_iteration(
        p,
        |v| {
            let mut out = vec![0.0; p];
            for i in 0..ds.len() {
                let x = ds.row(i);
                let xv: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
                for (o, xj) in out.iter_mut().zip(x) {
                    *o += xv * xj;
                }
            }
            out
        },
        5_000,
    );
    0.25 * top / m + reg
}

impl QuadraticLoss {
    /// Builds the loss and computes the spectrum bounds of `a`.
    pub fn new(a: Vec<f64>, b: ModelVector) -> Result<Self> {
        let d = b.dim();
        if a.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                got: a.len(),
            });
        }
        let ev = linalg::symmetric_eigenvalues(&a, d);
        let (lambda_min, lambda_max) = (ev[0], ev[d - 1]);
        if !(lambda_min > 0.0) {
            return Err(Error::Config(format!(
                "quadratic matrix is not positive definite (lambda_min = {lambda_min})"
            )));
        }
        Ok(QuadraticLoss {
            a,
            b,
            lambda_min,
            lambda_max,
        })
    }

    /// `(δ/2)‖w‖²`.
    pub fn ridge(dim: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("ridge modulus must be > 0, got {delta}")));
        }
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = delta;
        }
        Ok(QuadraticLoss {
            a,
            b: ModelVector::zeros(dim),
            lambda_min: delta,
            lambda_max: delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn center(&self) -> &ModelVector {
        &self.b
    }

    pub fn strong_convexity(&self) -> f64 {
        self.lambda_min
    }

    pub fn smoothness(&self) -> f64 {
        self.lambda_max
    }

    fn eval(&self, w: &ModelVector) -> (f64, ModelVector) {
        let r = w.sub(&self.b);
        let ar = linalg::matvec(&self.a, self.dim(), &r);
        let value = 0.5 * crate::vector::dot(&r, &ar);
        (value, ModelVector::from_vec(ar))
    }
}

impl LossSpec {
    pub fn dim(&self) -> usize {
        match self {
            LossSpec::MultinomialLogistic(l) => l.dim(),
            LossSpec::Quadratic(q) => q.dim(),
        }
    }

    /// Number of samples a batch may index; a quadratic is a single "sample".
    pub fn num_samples(&self) -> usize {
        match self {
            LossSpec::MultinomialLogistic(l) => l.data.len(),
            LossSpec::Quadratic(_) => 1,
        }
    }

    pub fn full_batch(&self) -> Vec<usize> {
        (0..self.num_samples()).collect()
    }

    /// Strong-convexity modulus guaranteed by construction.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            LossSpec::MultinomialLogistic(l) => l.reg,
            LossSpec::Quadratic(q) => q.lambda_min,
        }
    }

    fn check(&self, w: &ModelVector, batch: &[usize]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Config("empty mini-batch".into()));
        }
        w.ensure_dim(self.dim())?;
        let n = self.num_samples();
        if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
            return Err(Error::Config(format!(
                "batch index {bad} outside shard of {n} samples"
            )));
        }
        Ok(())
    }

    /// Mini-batch average loss and its gradient.
    pub fn eval(&self, w: &ModelVector, batch: &[usize]) -> Result<(f64, ModelVector)> {
        self.check(w, batch)?;
        Ok(match self {
            LossSpec::MultinomialLogistic(l) => {
                let (v, g) = l.eval(w, batch, true);
                (v, g.expect("gradient requested"))
            }
            LossSpec::Quadratic(q) => q.eval(w),
        })
    }

    pub fn value(&self, w: &ModelVector, batch: &[usize]) -> Result<f64> {
        self.check(w, batch)?;
        Ok(match self {
            LossSpec::MultinomialLogistic(l) => l.eval(w, batch, false).0,
            LossSpec::Quadratic(q) => q.eval(w).0,
        })
    }

    pub fn grad(&self, w: &ModelVector, batch: &[usize]) -> Result<ModelVector> {
        self.eval(w, batch).map(|(_, g)| g)
    }

    /// Deterministic full-shard value.
    pub fn full_value(&self, w: &ModelVector) -> Result<f64> {
        self.value(w, &self.full_batch())
    }

    pub fn full_grad(&self, w: &ModelVector) -> Result<ModelVector> {
        self.grad(w, &self.full_batch())
    }

    /// Predicted class of `features`; only defined for the logistic loss.
    pub fn predict(&self, w: &ModelVector, features: &[f64]) -> Result<usize> {
        match self {
            LossSpec::MultinomialLogistic(l) => softmax_predict(l.data.classes(), w, features),
            LossSpec::Quadratic(_) => Err(Error::Config(
                "class prediction needs a multinomial-logistic loss".into(),
            )),
        }
    }
}

/// Free-function form of [`LossSpec::eval`].
pub fn loss_eval(spec: &LossSpec, w: &ModelVector, batch: &[usize]) -> Result<(f64, ModelVector)> {
    spec.eval(w, batch)
}

/// Arg-max class score for a feature vector; ties go to the lowest class.
pub fn softmax_predict(classes: usize, w: &ModelVector, features: &[f64]) -> Result<usize> {
    let p = features.len();
    if w.dim() != classes * p {
        return Err(Error::Dimension {
            expected: classes * p,
            got: w.dim(),
        });
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for c in 0..classes {
        let s: f64 = w[c * p..(c + 1) * p].iter().zip(features).map(|(a, b)| a * b).sum();
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    Ok(best)
}

/// Fraction of rows of `ds` classified correctly by `w`.
pub fn accuracy(ds: &Dataset, w: &ModelVector) -> Result<f64> {
    if ds.is_empty() {
        return Ok(f64::NAN);
    }
    let mut hits = 0usize;
    for i in 0..ds.len() {
        if softmax_predict(ds.classes(), w, ds.row(i))? == ds.label(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}

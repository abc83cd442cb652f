//! Independent oracles shared by the integration tests and the acceptance
//! run. Nothing here calls into the code under test except to build inputs.

#![allow(dead_code)]

use std::sync::Arc;

use frpg::baselines::{geomed_objective, geomed_weiszfeld, krum_select};
use frpg::data::Dataset;
use frpg::loss::{LogisticLoss, LossSpec, QuadraticLoss};
use frpg::penalty::{penalty_eval, penalty_prox, PenaltySpec};
use frpg::rng::{Purpose, StreamKey};
use frpg::ModelVector;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(tag: usize) -> rand_chacha::ChaCha8Rng {
    StreamKey::new(0x0dac1e, Purpose::Synthetic, tag, 0, 0).rng()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Huber profile `h(t)` for `t ≥ 0`.
pub fn huber(mu: f64, t: f64) -> f64 {
    if t <= mu {
        t * t / (2.0 * mu)
    } else {
        t - mu / 2.0
    }
}

/// `φ(a) − φ(b)` for `φ(t) = c·h(t) + ½(t − r)²`, computed without forming
/// either value so that comparisons stay exact near the minimum.
fn phi_diff(mu: f64, c: f64, r: f64, a: f64, b: f64) -> f64 {
    let dh = if a <= mu && b <= mu {
        (a - b) * (a + b) / (2.0 * mu)
    } else if a > mu && b > mu {
        a - b
    } else {
        huber(mu, a) - huber(mu, b)
    };
    c * dh + 0.5 * (a - b) * (a + b - 2.0 * r)
}

/// Golden-section search on `[lo, hi]` driven by a comparison `less(a, b)`
/// meaning "f(a) < f(b)"; returns the final midpoint.
fn golden(less: impl Fn(f64, f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    for _ in 0..200 {
        if less(x1, x2) {
            hi = x2;
            x2 = x1;
            x1 = hi - g * (hi - lo);
        } else {
            lo = x1;
            x1 = x2;
            x2 = lo + g * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes `c·p(x) + ½‖x − v‖²` numerically. The penalty is radial, so the
/// minimizer lies on the segment from 0 to `v`; a grid brackets it and golden
/// section refines it.
pub fn numeric_prox(mu: f64, c: f64, v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return vec![0.0; v.len()];
    }
    const GRID: usize = 2000;
    let at = |i: usize| r * i as f64 / GRID as f64;
    let mut best = 0;
    for i in 1..=GRID {
        if phi_diff(mu, c, r, at(i), at(best)) < 0.0 {
            best = i;
        }
    }
    let t = golden(
        |a, b| phi_diff(mu, c, r, a, b) < 0.0,
        at(best.saturating_sub(1)),
        at((best + 1).min(GRID)),
    );
    v.iter().map(|x| x * t / r).collect()
}

/// Central differences, step `h` per coordinate.
pub fn fd_grad(f: impl Fn(&ModelVector) -> f64, w: &ModelVector, h: f64) -> Vec<f64> {
    (0..w.dim())
        .map(|i| {
            let mut p = w.clone();
            let mut m = w.clone();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let n = analytic.iter().map(|x| x * x).sum::<f64>().sqrt();
    dist(analytic, numeric) / n.max(1e-12)
}

pub fn random_logistic(r: &mut impl Rng, m: usize, p: usize, classes: usize, reg: f64) -> LossSpec {
    let x: Vec<f64> = (0..m * p).map(|_| r.random_range(0.0..1.0)).collect();
    let y: Vec<usize> = (0..m).map(|_| r.random_range(0..classes)).collect();
    let ds = Dataset::new(x, p, y, classes).unwrap();
    LossSpec::MultinomialLogistic(LogisticLoss::new(Arc::new(ds), reg).unwrap())
}

pub fn random_quadratic(r: &mut impl Rng, d: usize) -> LossSpec {
    let m: Vec<f64> = (0..d * d).map(|_| r.sample(StandardNormal)).collect();
    // A = MᵀM + I
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (0..d).map(|k| m[k * d + i] * m[k * d + j]).sum::<f64>()
                + if i == j { 1.0 } else { 0.0 };
        }
    }
    let b: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
    LossSpec::Quadratic(QuadraticLoss::new(a, ModelVector::from_vec(b)).unwrap())
}

pub fn random_point(r: &mut impl Rng, d: usize) -> ModelVector {
    ModelVector::from_vec((0..d).map(|_| r.sample(StandardNormal)).collect())
}

/// Largest distance between the closed-form prox and the numeric minimizer
/// over `cases` random draws.
pub fn prox_worst_error(cases: usize) -> f64 {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let mu = 10f64.powf(r.random_range(-3.0..0.5));
        let c = 10f64.powf(r.random_range(-2.0..0.5));
        let d = r.random_range(1..=5);
        let scale = 10f64.powf(r.random_range(-3.0..1.0));
        let v: Vec<f64> = (0..d).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect();
        let spec = PenaltySpec::huber(mu, 1.0).unwrap();
        let got = penalty_prox(&spec, c, &ModelVector::from_vec(v.clone())).unwrap();
        worst = worst.max(dist(&got, &numeric_prox(mu, c, &v)));
    }
    worst
}

/// Worst relative error of the penalty gradient against central differences.
pub fn penalty_fd_worst(cases: usize) -> f64 {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let mu = 10f64.powf(r.random_range(-1.0..0.5));
        let spec = PenaltySpec::huber(mu, 1.0).unwrap();
        let d = r.random_range(1..=6);
        let dir: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        let n = dist(&dir, &vec![0.0; d]);
        // stay clear of the kink so the difference stencil does not straddle it
        let radius = if case % 2 == 0 {
            mu * r.random_range(0.05..0.9)
        } else {
            mu * r.random_range(1.1..20.0)
        };
        let z = ModelVector::from_vec(dir.iter().map(|x| x * radius / n).collect());
        let (_, g) = penalty_eval(&spec, &z).unwrap();
        let fd = fd_grad(|x| spec.value(x).unwrap(), &z, 1e-4 * mu);
        worst = worst.max(rel_err(&g, &fd));
    }
    worst
}

/// Worst relative errors `(logistic, quadratic)` of the loss gradients.
pub fn loss_fd_worst(cases: usize) -> (f64, f64) {
    let mut r = rng(3);
    let (mut wl, mut wq): (f64, f64) = (0.0, 0.0);
    for _ in 0..cases {
        let classes = r.random_range(2..=4);
        let p = r.random_range(1..=4);
        let m = r.random_range(1..=8);
        let l = random_logistic(&mut r, m, p, classes, 0.003);
        let batch: Vec<usize> = (0..r.random_range(1..=5)).map(|_| r.random_range(0..m)).collect();
        let w = random_point(&mut r, classes * p);
        let (_, g) = l.eval(&w, &batch).unwrap();
        let fd = fd_grad(|x| l.value(x, &batch).unwrap(), &w, 1e-5);
        wl = wl.max(rel_err(&g, &fd));

        let d = r.random_range(1..=5);
        let q = random_quadratic(&mut r, d);
        let w = random_point(&mut r, d);
        let (_, g) = q.eval(&w, &[0]).unwrap();
        let fd = fd_grad(|x| q.value(x, &[0]).unwrap(), &w, 1e-5);
        wq = wq.max(rel_err(&g, &fd));
    }
    (wl, wq)
}

pub fn random_points(r: &mut impl Rng, q: usize, d: usize, scale: f64) -> Vec<ModelVector> {
    (0..q)
        .map(|_| ModelVector::from_vec((0..d).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()))
        .collect()
}

/// Krum by enumeration: every candidate's score is the smallest sum over all
/// `Q − b − 2`-subsets of the other candidates.
pub fn krum_brute_force(c: &[ModelVector], b: usize) -> usize {
    let q = c.len();
    let m = q - b - 2;
    let mut best = (f64::INFINITY, 0);
    for i in 0..q {
        let others: Vec<usize> = (0..q).filter(|&j| j != i).collect();
        let mut score = f64::INFINITY;
        for mask in 0u32..(1 << others.len()) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let s: f64 = (0..others.len())
                .filter(|bit| mask & (1 << bit) != 0)
                .map(|bit| c[i].dist_sq(&c[others[bit]]))
                .sum();
            score = score.min(s);
        }
        if score < best.0 {
            best = (score, i);
        }
    }
    best.1
}

/// Number of random instances on which `krum_select` disagrees with
/// enumeration.
pub fn krum_mismatches(instances: usize) -> usize {
    let mut r = rng(5);
    let mut bad = 0;
    for _ in 0..instances {
        let q = r.random_range(3..=9);
        let b = r.random_range(0..=q - 3);
        let d = r.random_range(1..=4);
        let mut pts = random_points(&mut r, q, d, 1.0);
        // a few far outliers
        for p in pts.iter_mut().take(b) {
            *p = p.scale(r.random_range(1.0..100.0));
        }
        if krum_select(&pts, b).unwrap() != krum_brute_force(&pts, b) {
            bad += 1;
        }
    }
    bad
}

/// Minimum of `Σ|xᵢ − y|` by a grid over the data range refined by golden
/// section around the best grid point.
pub fn line_scan_min(xs: &[f64]) -> f64 {
    let f = |y: f64| xs.iter().map(|x| (x - y).abs()).sum::<f64>();
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return f(lo);
    }
    const GRID: usize = 10_000;
    let at = |i: usize| lo + (hi - lo) * i as f64 / GRID as f64;
    let best = (0..=GRID).min_by(|&a, &b| f(at(a)).total_cmp(&f(at(b)))).unwrap();
    let y = golden(|a, b| f(a) < f(b), at(best.saturating_sub(1)), at((best + 1).min(GRID)));
    f(y)
}

/// Worst gap between the Weiszfeld objective and the line-scan minimum over
/// random scalar instances.
pub fn geomed_worst_gap(instances: usize) -> f64 {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let q = r.random_range(1..=9);
        let xs: Vec<f64> = (0..q).map(|_| r.random_range(-50.0..50.0)).collect();
        let pts: Vec<ModelVector> = xs.iter().map(|&x| ModelVector::from_vec(vec![x])).collect();
        let med = geomed_weiszfeld(&pts, 1e-10, 10_000).unwrap();
        worst = worst.max((geomed_objective(&pts, &med.point) - line_scan_min(&xs)).abs());
    }
    worst
}

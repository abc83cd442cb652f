//! Krum, Weiszfeld and RSA against brute-force and scan oracles.

mod common;

use std::sync::Arc;

use frpg::adversary::{faulty_upload, AttackKind, AttackSpec, Protocol};
use frpg::algorithms::RoundRunner;
use frpg::baselines::{
    baseline_step, geomed_weiszfeld, krum_select, rsa_server_update, sign,
    AggregationRule, BaselineRunner,
};
use frpg::data::{BatchSpec, Dataset};
use frpg::harness::HyperParams;
use frpg::loss::{LogisticLoss, LossSpec, QuadraticLoss};
use frpg::penalty::PenaltySpec;
use frpg::problem::Problem;
use frpg::rng::{Purpose, StreamKey};
use frpg::ModelVector;
use common::{geomed_worst_gap, krum_brute_force, krum_mismatches, random_points, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn krum_matches_enumeration_on_200_instances() {
    assert_eq!(krum_mismatches(200), 0);
}

#[test]
fn krum_scalar_example_breaks_ties_low() {
    let pts: Vec<ModelVector> = [0.0, 0.1, 0.2, 10.0].iter().map(|&x| ModelVector::from_vec(vec![x])).collect();
    assert_eq!(krum_select(&pts, 1).unwrap(), 0);
    assert_eq!(krum_brute_force(&pts, 1), 0);
}

#[test]
fn weiszfeld_matches_line_scan_on_scalars() {
    let worst = geomed_worst_gap(200);
    assert!(worst <= 1e-6, "worst objective gap {worst}");
}

#[test]
fn weiszfeld_hand_cases() {
    let scalars = |xs: &[f64]| -> Vec<ModelVector> { xs.iter().map(|&x| ModelVector::from_vec(vec![x])).collect() };
    let m = geomed_weiszfeld(&scalars(&[0.0, 0.0, 5.0]), 1e-10, 1000).unwrap();
    assert!(m.point[0].abs() < 1e-9);
    let h = 3f64.sqrt() / 2.0;
    let tri = vec![
        ModelVector::from_vec(vec![0.0, 0.0]),
        ModelVector::from_vec(vec![1.0, 0.0]),
        ModelVector::from_vec(vec![0.5, h]),
    ];
    let m = geomed_weiszfeld(&tri, 1e-12, 10_000).unwrap();
    assert!((m.point[0] - 0.5).abs() < 1e-6 && (m.point[1] - h / 3.0).abs() < 1e-6);
}

#[test]
fn weiszfeld_objective_never_increases() {
    let mut r = rng(3);
    for _ in 0..100 {
        let q = r.random_range(2..=12);
        let d = r.random_range(1..=6);
        let scale = 10f64.powf(r.random_range(-2.0..4.0));
        let pts = random_points(&mut r, q, d, scale);
        let med = geomed_weiszfeld(&pts, 1e-12, 500).unwrap();
        for w in med.objective_trace.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn geomed_resists_one_far_outlier() {
    let mut r = rng(4);
    for _ in 0..50 {
        let mut pts = random_points(&mut r, 4, 3, 1.0);
        let centroid = ModelVector::sum_ordered(&pts).unwrap().scale(0.25);
        let mut diam: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                diam = diam.max(a.dist_sq(b).sqrt());
            }
        }
        let dir = random_points(&mut r, 1, 3, 1.0).remove(0);
        let n = dir.norm();
        pts.push(centroid.add(&dir.scale(1e6 / n)));
        let med = geomed_weiszfeld(&pts, 1e-10, 10_000).unwrap();
        assert!(med.point.dist_sq(&centroid).sqrt() <= 2.0 * diam);
    }
}

#[test]
fn sign_of_zero_is_zero() {
    assert_eq!((sign(-2.0), sign(0.0), sign(3.0)), (-1.0, 0.0, 1.0));
}

fn logistic_problem(workers: usize, faulty: usize, kind: AttackKind) -> Problem {
    let (p, classes, m) = (5, 3, 10);
    let mut r = rng(9);
    let losses = (0..workers)
        .map(|_| {
            let x: Vec<f64> = (0..m * p).map(|_| r.random_range(0.0..1.0)).collect();
            let y: Vec<usize> = (0..m).map(|_| r.random_range(0..classes)).collect();
            let ds = Dataset::new(x, p, y, classes).unwrap();
            LossSpec::MultinomialLogistic(LogisticLoss::new(Arc::new(ds), 0.01).unwrap())
        })
        .collect();
    let mut h = HyperParams::uniform(1.6, 1e-3, 0.01, 2.0, 0.01, 2.0, workers, workers - faulty);
    h.batch = BatchSpec::Sampled(4);
    Problem::new(
        h,
        LossSpec::Quadratic(QuadraticLoss::ridge(p * classes, 0.01).unwrap()),
        losses,
        AttackSpec::last(kind, workers, faulty),
        None,
        None,
    )
    .unwrap()
}

#[test]
fn rsa_server_step_is_bounded_under_gaussian_attack() {
    let p = logistic_problem(8, 3, AttackKind::Gaussian { scale: 1e10 });
    let rule = AggregationRule::Rsa {
        lambda: 1.6,
        step_scale: 3.0,
    };
    let mut run = BaselineRunner::new(&p, rule).unwrap();
    let d = p.dim() as f64;
    for k in 1..=100 {
        let before = run.server_model().clone();
        let g0 = p.server.full_grad(&before).unwrap();
        run.step().unwrap();
        let step = run.server_model().dist_sq(&before).sqrt();
        let eta = baseline_step(3.0, k);
        assert!(step <= eta * (g0.norm() + 1.6 * 8.0 * d.sqrt()) * (1.0 + 1e-12));
    }
}

#[test]
fn honest_robust_baselines_reduce_the_loss() {
    let p = logistic_problem(8, 0, AttackKind::None);
    for rule in [
        // the server moves up to ηλQ per coordinate, so RSA needs a short step
        AggregationRule::Rsa {
            lambda: 0.5,
            step_scale: 0.02,
        },
        AggregationRule::Krum {
            assumed_faulty: 1,
            step_scale: 0.5,
        },
        AggregationRule::GeoMed {
            tol: 1e-8,
            max_iter: 200,
            step_scale: 0.5,
        },
        AggregationRule::MeanSgd { step_scale: 0.5 },
    ] {
        let mut run = BaselineRunner::new(&p, rule).unwrap();
        let first = run.step().unwrap().record.loss_f;
        let mut last = first;
        for _ in 0..200 {
            last = run.step().unwrap().record.loss_f;
        }
        assert!(last < first, "{rule:?}: {first} -> {last}");
    }
}

proptest! {
    #[test]
    fn krum_picks_the_same_vector_under_permutation(seed in any::<u64>(), q in 3usize..9, d in 1usize..4) {
        let mut r = StreamKey::new(seed, Purpose::Synthetic, 0, 0, 0).rng();
        let b = r.random_range(0..=q - 3);
        let pts = random_points(&mut r, q, d, 1.0);
        let pick = krum_select(&pts, b).unwrap();
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut r);
        let shuffled: Vec<ModelVector> = perm.iter().map(|&i| pts[i].clone()).collect();
        let pick2 = krum_select(&shuffled, b).unwrap();
        // Mutual nearest neighbours tie exactly, so compare winning scores.
        let score = |c: &[ModelVector], i: usize| {
            let mut row: Vec<f64> = (0..q).filter(|&j| j != i).map(|j| c[i].dist_sq(&c[j])).collect();
            row.sort_by(f64::total_cmp);
            row[..q - b - 2].iter().sum::<f64>()
        };
        prop_assert_eq!(score(&pts, pick), score(&shuffled, pick2));
        prop_assert!(shuffled.contains(&pts[pick]));
    }

    #[test]
    fn rsa_server_ignores_faulty_magnitude(
        seed in any::<u64>(),
        d in 1usize..10,
        log_scale in 0f64..10.0,
    ) {
        let mut r = StreamKey::new(seed, Purpose::Attack, 0, 0, 0).rng();
        let w0 = random_points(&mut r, 1, d, 1.0).remove(0);
        let dir = random_points(&mut r, 1, d, 1.0).remove(0);
        let honest = random_points(&mut r, 3, d, 1.0);
        let pen = PenaltySpec::huber(1e-3, 1.6).unwrap();
        let grad0 = w0.scale(0.01);
        let server_after = |s: f64| {
            let fab = w0.add(&dir.scale(s));
            let mut terms: Vec<ModelVector> = honest
                .iter()
                .map(|h| faulty_upload(Protocol::Rsa, &w0, h, &pen).unwrap())
                .collect();
            terms.push(faulty_upload(Protocol::Rsa, &w0, &fab, &pen).unwrap());
            rsa_server_update(&w0, &grad0, &terms, 0.1)
        };
        prop_assert_eq!(server_after(1.0), server_after(10f64.powf(log_scale)));
    }
}

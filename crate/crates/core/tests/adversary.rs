//! Attack models: noise statistics, the capped upload, label flipping.

use frpg::adversary::{corrupt_labels, faulty_upload, gaussian_model, AttackKind, AttackSpec, Protocol};
use frpg::data::Dataset;
use frpg::penalty::PenaltySpec;
use frpg::rng::{Purpose, StreamKey};
use frpg::ModelVector;

#[test]
fn gaussian_model_has_requested_spread() {
    let scale = 1e4;
    let v = gaussian_model(100_000, scale, StreamKey::new(11, Purpose::Attack, 3, 7, 0));
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var.sqrt() / scale - 1.0).abs() < 0.02, "std {}", var.sqrt());
    // mean within 4 standard errors
    assert!(mean.abs() < 4.0 * scale / n.sqrt());
}

#[test]
fn gaussian_streams_are_keyed() {
    let key = StreamKey::new(5, Purpose::Attack, 1, 2, 0);
    assert_eq!(gaussian_model(50, 1.0, key), gaussian_model(50, 1.0, key));
    let other = StreamKey::new(5, Purpose::Attack, 1, 3, 0);
    assert_ne!(gaussian_model(50, 1.0, key), gaussian_model(50, 1.0, other));
}

#[test]
fn enormous_fabrication_uploads_exactly_lambda() {
    let pen = PenaltySpec::huber(1e-3, 1.6).unwrap();
    for (i, scale) in [1e4, 1e10, 1e200].into_iter().enumerate() {
        let fab = gaussian_model(7850, scale, StreamKey::new(0, Purpose::Attack, i, 0, 0));
        let w0 = ModelVector::zeros(7850);
        for proto in [Protocol::Frpg, Protocol::Lfrpg] {
            let g = faulty_upload(proto, &w0, &fab, &pen).unwrap();
            assert!(g.norm() <= 1.6);
            assert!((g.norm() - 1.6).abs() < 1e-12);
        }
    }
}

#[test]
fn plain_aggregators_receive_the_fabrication() {
    let pen = PenaltySpec::huber(1e-3, 1.6).unwrap();
    let w0 = ModelVector::from_vec(vec![1.0, -2.0, 0.0]);
    let fab = ModelVector::from_vec(vec![1e9, 3.0, 0.0]);
    for proto in [Protocol::Krum, Protocol::GeoMed, Protocol::MeanSgd] {
        assert_eq!(faulty_upload(proto, &w0, &fab, &pen).unwrap(), fab);
    }
    let rsa = faulty_upload(Protocol::Rsa, &w0, &fab, &pen).unwrap();
    assert_eq!(rsa, ModelVector::from_vec(vec![-1.6, -1.6, 0.0]));
}

#[test]
fn label_flip_reverses_classes() {
    let ds = Dataset::new((0..10).map(f64::from).collect(), 1, (0..10).collect(), 10).unwrap();
    let flipped = corrupt_labels(&ds, 10).unwrap();
    assert_eq!(flipped.labels(), &[9, 8, 7, 6, 5, 4, 3, 2, 1, 0]);
    for r in 0..10 {
        assert_eq!(flipped.row(r), ds.row(r));
    }
    let bad = Dataset::new(vec![0.0], 1, vec![4], 5).unwrap();
    assert!(corrupt_labels(&bad, 3).is_err());
}

#[test]
fn attack_spec_membership() {
    let spec = AttackSpec::last(AttackKind::LabelFlip, 20, 4);
    assert_eq!(spec.faulty, vec![16, 17, 18, 19]);
    assert!(spec.validate(20).is_ok());
    assert!(spec.validate(18).is_err());
    assert!(!AttackSpec::none().is_faulty(0));
    let neg = AttackSpec::last(AttackKind::Gaussian { scale: -1.0 }, 4, 1);
    assert!(neg.validate(4).is_err());
}

//! Config resolution, reproducibility, the CLI contract and the envelopes.

use std::path::{Path, PathBuf};
use std::process::Command;

use frpg::harness::{
    compute_frpg_bound, compute_lfrpg_bound, parse_config, prepare, read_metrics, run_experiment,
    BoundConstants, HyperParams, RunConfig,
};
use frpg::{Error, ErrorClass, ModelVector};

fn digits_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/digits")
}

fn synthetic_toml(algorithm: &str, rounds: usize, metrics: &Path) -> String {
    format!(
        r#"
[algorithm]
name = "{algorithm}"
rounds = {rounds}
frame_len = 3

[data]
kind = "synthetic"
dim = 6

[hyper]
workers = 6
reliable = 5
seed = 4

[attack]
kind = "gaussian"

[output]
metrics = "{}"
"#,
        metrics.display()
    )
}

fn digits_toml(extra: &str, metrics: &Path) -> String {
    let d = digits_dir();
    format!(
        r#"
[algorithm]
name = "frpg"
rounds = 5

[data]
kind = "idx"
name = "digits"
train_images = "{}"
train_labels = "{}"
{extra}

[attack]
kind = "label_flip"

[output]
metrics = "{}"
"#,
        d.join("train-images-idx3-ubyte").display(),
        d.join("train-labels-idx1-ubyte").display(),
        metrics.display()
    )
}

#[test]
fn unknown_key_is_rejected() {
    let text = "[algorithm]\nname = \"frpg\"\nroundz = 3\n[data]\nkind = \"synthetic\"\n";
    let err = RunConfig::from_toml_str(text, None).unwrap_err();
    assert!(matches!(err, Error::Config(ref m) if m.contains("roundz")), "{err}");
}

#[test]
fn reliable_above_workers_names_the_line() {
    let text = "[algorithm]\nname = \"frpg\"\n[data]\nkind = \"synthetic\"\n[hyper]\nworkers = 4\nreliable = 5\n";
    let err = RunConfig::from_toml_str(text, None).unwrap_err();
    let msg = err.to_string();
    assert_eq!(err.class(), ErrorClass::Config);
    assert!(msg.contains("line 7") && msg.contains("reliable"), "{msg}");
}

#[test]
fn image_defaults_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(&digits_toml("", &dir.path().join("m.csv")), None).unwrap();
    let h = &cfg.hyper;
    assert_eq!((h.lambda, h.mu, h.delta, h.delta0), (1.6, 1e-3, Some(0.003), Some(0.003)));
    assert_eq!((h.workers, h.reliable, h.batch_size), (20, 16, Some(15)));
    assert_eq!(cfg.attack.faulty, Some(vec![16, 17, 18, 19]));

    let prepared = prepare(&cfg).unwrap();
    let l = prepared.config.hyper.lipschitz.unwrap();
    assert!(l > 0.003 && prepared.config.hyper.lipschitz0 == Some(l));

    let usps = digits_toml("", &dir.path().join("m.csv")).replace("\"digits\"", "\"usps\"");
    let cfg = RunConfig::from_toml_str(&usps, None).unwrap();
    assert_eq!((cfg.hyper.lipschitz, cfg.hyper.lipschitz0), (Some(156.0), Some(156.0)));
}

#[test]
fn resolved_config_reproduces_metrics_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let cfg = RunConfig::from_toml_str(&synthetic_toml("lfrpg", 40, &first), None).unwrap();
    let summary = run_experiment(&cfg).unwrap();

    let mut again = parse_config(&summary.resolved_path).unwrap();
    let second = dir.path().join("second.csv");
    again.output.metrics = second.clone();
    again.output.resolved_config = Some(dir.path().join("second.resolved.toml"));
    run_experiment(&again).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(read_metrics(&first).unwrap().len(), 40);
}

fn frpg(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_frpg")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: String| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };

    let ok = write("ok.toml", synthetic_toml("frpg", 5, &dir.path().join("ok.csv")));
    let (code, stdout, _) = frpg(&["run", "--config", &ok]);
    assert_eq!(code, 0);
    assert!(stdout.contains("5 rounds"));
    assert_eq!(read_metrics(dir.path().join("ok.csv")).unwrap().len(), 5);

    let bad = write("bad.toml", "[algorithm]\nname = \"nope\"\n".into());
    let (code, _, stderr) = frpg(&["run", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(stderr.contains("\"error\":\"config\""), "{stderr}");

    let missing = dir.path().join("absent");
    let data = write("data.toml", digits_toml("", &dir.path().join("d.csv")).replace(
        &digits_dir().join("train-images-idx3-ubyte").display().to_string(),
        &missing.display().to_string(),
    ));
    let (code, _, stderr) = frpg(&["run", "--config", &data]);
    assert_eq!(code, 3, "{stderr}");

    let blocker = dir.path().join("plain-file");
    std::fs::write(&blocker, "x").unwrap();
    let runtime = write("rt.toml", synthetic_toml("frpg", 5, &blocker.join("sub/m.csv")));
    let (code, _, stderr) = frpg(&["run", "--config", &runtime]);
    assert_eq!(code, 4);
    assert!(stderr.contains("\"error\":\"runtime\""), "{stderr}");
}

#[test]
fn cli_partition_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let part = dir.path().join("p.toml");
    std::fs::write(&part, digits_toml("", &dir.path().join("p.csv"))).unwrap();
    let (code, stdout, stderr) = frpg(&["partition", "--config", part.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[0].starts_with("worker,faulty,size,label_0"));

    let bound = dir.path().join("b.toml");
    std::fs::write(&bound, synthetic_toml("frpg", 10, &dir.path().join("b.csv"))).unwrap();
    let out = dir.path().join("bound.csv");
    let (code, _, stderr) = frpg(&["bound", "--config", bound.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 12);
}

fn constants() -> (BoundConstants, Vec<ModelVector>, Vec<ModelVector>) {
    let mut h = HyperParams::uniform(1.6, 1e-3, 0.5, 4.0, 0.7, 3.0, 5, 4);
    h.sigma = Some(vec![0.1, 0.2, 0.3, 0.4]);
    h.frame_len = 4;
    let c = BoundConstants::from_params(&h, &[0, 1, 2, 3]).unwrap();
    let u: Vec<ModelVector> = (0..5)
        .map(|i| ModelVector::from_vec(vec![i as f64 * 0.5, 1.0 - i as f64]))
        .collect();
    let v = vec![ModelVector::zeros(2); 5];
    (c, u, v)
}

#[test]
fn frpg_envelope_matches_hand_evaluation() {
    let (c, u, v) = constants();
    let dist: Vec<f64> = u.iter().map(|x| x.norm().powi(2)).collect();
    // α at k = 1: 9δ₀/14 + 1.5L₀ for the server, 27δ/14 + L for workers
    let a0 = 9.0 * 0.5 / 14.0 + 1.5 * 4.0;
    let an = 27.0 * 0.7 / 14.0 + 3.0;
    let eta9 = (3.0 * 0.5 / 8.0 + a0 / 2.0) * dist[0] + an / 2.0 * dist[1..].iter().sum::<f64>();
    let up = 1.6f64.powi(2) * 25.0;
    let s0 = 1.6f64.powi(2) * 36.0;
    let eta10 = (7.0 * up + 21.0 / 8.0 * s0) / 0.5
        + [0.1f64, 0.2, 0.3, 0.4].iter().map(|s| 7.0 * s * s / (12.0 * 0.7)).sum::<f64>();
    let gap = 2.5;
    let rounds = [0usize, 1, 7, 100, 5000];
    let curve = compute_frpg_bound(&c, gap, Some(&u), &v, &rounds).unwrap();
    for (&k, got) in rounds.iter().zip(&curve.values) {
        let s = (k as f64 + 2.0).powi(2);
        let want = 4.0 / s * (gap + eta9) + 4.0 * k as f64 / s * eta10;
        assert!((got - want).abs() <= 1e-12 * want, "K={k}: {got} vs {want}");
    }
    assert!((curve.neighborhood_scale - 1.6f64.powi(2) / 0.5).abs() < 1e-12);
}

#[test]
fn lfrpg_envelope_matches_hand_evaluation() {
    let (c, u, v) = constants();
    let dist: Vec<f64> = u.iter().map(|x| x.norm().powi(2)).collect();
    let a0 = 9.0 * 0.5 / 14.0 + 1.5 * 4.0;
    let an = 27.0 * 0.7 / 14.0 + 3.0;
    let (f0, fstar) = (3.0, 0.25);
    let eta16 = an * dist[1..].iter().sum::<f64>();
    let eta17 = (1.5 * 0.5 + 2.0 * a0) * dist[0] + 4.0 * f0 - 4.0 * fstar;
    let eta18 = [0.1f64, 0.2, 0.3, 0.4].iter().map(|s| 7.0 * s * s / (3.0 * 0.7)).sum::<f64>()
        + (11.0 * 1.6f64.powi(2) * 36.0 + 28.0 * 1.6f64.powi(2) * 25.0) / 0.5;
    let frames = [0usize, 3, 250];
    let curve = compute_lfrpg_bound(&c, f0, fstar, Some(&u), &v, &frames).unwrap();
    for (&i, got) in frames.iter().zip(&curve.values) {
        let s = (i as f64 + 2.0).powi(2);
        let want = 2.0 * eta16 / (4.0 * s) + (eta17 + i as f64 * eta18) / s;
        assert!((got - want).abs() <= 1e-12 * want, "I={i}: {got} vs {want}");
    }
}

//! End-to-end checks of the command-line surface: exit codes, artifact
//! layout, config-file precedence and manifest integrity. Budget-sized
//! runs only; the full-scale result checks live in the acceptance suite.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torsion-pinn"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = binary().args(args).output().expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn sha256(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn missing_shape_is_a_usage_error() {
    let (code, _, err) = run(&["torsion2d"]);
    assert_eq!(code, 1, "stderr: {err}");
    assert!(err.contains("missing shape"), "stderr: {err}");
}

#[test]
fn unknown_shape_is_a_usage_error() {
    let (code, _, err) = run(&["torsion2d", "pentagon"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown shape"), "stderr: {err}");
}

#[test]
fn scale_below_one_is_a_usage_error() {
    let (code, _, err) = run(&["vs1d", "--scale", "0.5", "--epochs", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 1"), "stderr: {err}");
}

#[test]
fn increasing_h_list_is_a_usage_error() {
    let (code, _, err) = run(&["oracle", "sweep", "--shape", "square", "--h", "0.005,0.01"]);
    assert_eq!(code, 1);
    assert!(err.contains("strictly decreasing"), "stderr: {err}");
}

#[test]
fn missing_checkpoint_is_a_runtime_failure() {
    let (code, _, _) = run(&[
        "parametric",
        "eval",
        "--ckpt",
        "/nonexistent/model.ckpt",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn defaults_lists_config_keys() {
    let (code, out, _) = run(&["defaults"]);
    assert_eq!(code, 0);
    for key in ["epochs", "seed", "grid_spacing", "quad_h"] {
        assert!(out.contains(key), "missing {key} in defaults output");
    }
}

#[test]
fn oracle_poisson_writes_field_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = run(&[
        "oracle",
        "poisson",
        "--shape",
        "square",
        "--h",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("J_fd"));
    assert!(out.join("oracle_field.csv").exists());

    // The manifest digests must verify against the emitted files.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    let digest = manifest["outputs"]["oracle_field.csv"].as_str().unwrap();
    assert_eq!(digest, sha256(&out.join("oracle_field.csv")));
}

#[test]
fn oracle_sweep_is_digest_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, _, err) = run(&[
            "oracle",
            "sweep",
            "--shape",
            "irregular",
            "--h",
            "0.02,0.01",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    assert_eq!(
        sha256(&a.join("sensitivity.csv")),
        sha256(&b.join("sensitivity.csv"))
    );
}

#[test]
fn domain_file_runs_through_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let dom = dir.path().join("l_shape.dom");
    std::fs::write(
        &dom,
        "shape = polygon\nvertices = 0,0; 0.2,0; 0.2,0.1; 0.12,0.1; 0.12,0.2; 0,0.2\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = run(&[
        "oracle",
        "poisson",
        "--domain",
        dom.to_str().unwrap(),
        "--h",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("l_shape"), "stdout: {stdout}");
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "shape = square\nh = 0.01\ng = 1\n").unwrap();
    let out = dir.path().join("run");
    // Flag overrides the file's h; shape comes from the file.
    let (code, stdout, err) = run(&[
        "oracle",
        "poisson",
        "--config",
        cfg.to_str().unwrap(),
        "--h",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("square"));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"h\": \"0.005\""), "{manifest}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "shap = square\n").unwrap();
    let (code, _, err) = run(&["oracle", "poisson", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown key"), "stderr: {err}");
}

#[test]
fn tiny_torsion2d_run_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = run(&[
        "torsion2d",
        "circle",
        "--epochs",
        "60",
        "--seed",
        "1",
        "--grid-spacing",
        "0.02",
        "--quad-h",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("rel_error"));
    for name in ["field.csv", "loss.csv", "summary.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let loss = std::fs::read_to_string(out.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss_r,loss_b,loss_total,rel_l2"));
    assert_eq!(loss.lines().count(), 61);
}

#[test]
fn tiny_vs1d_fanout_writes_per_seed_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = run(&[
        "vs1d",
        "--scale",
        "4",
        "--seeds",
        "2",
        "--epochs",
        "150",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("scale 4"));
    for seed in 0..2 {
        for name in ["solution.csv", "loss.csv", "errors.csv"] {
            assert!(
                out.join("scale_4").join(format!("seed_{seed}")).join(name).exists(),
                "missing scale_4/seed_{seed}/{name}"
            );
        }
    }
    let comparison = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 3);
}

#[test]
fn parametric_train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let ckpt = out.join("model.ckpt");
    let (code, stdout, err) = run(&[
        "parametric",
        "train",
        "--seed",
        "1",
        "--epochs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("rel_l2"));
    assert!(ckpt.exists());
    assert!(out.join("curves.csv").exists());

    let (code, stdout, _) = run(&["parametric", "eval", "--ckpt", ckpt.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("aggregate rel_l2"));

    let (code, stdout, _) = run(&[
        "parametric",
        "predict",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--x",
        "0.5",
        "--T",
        "5",
        "--m",
        "0.7",
        "--sigma",
        "0.5",
    ]);
    assert_eq!(code, 0);
    let value: f64 = stdout.trim().parse().expect("numeric output");
    assert!(value.is_finite());

    let (code, stdout, _) = run(&["ckpt", "info", ckpt.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("4 inputs"));
    assert!(stdout.contains("meta.seed = 1"));
    assert!(stdout.contains("sha256:"));
}

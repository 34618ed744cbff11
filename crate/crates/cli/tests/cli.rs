use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nqp");

fn nqp(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("NQP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nqp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

const SMALL: &str = r#"{
  "system": {"hamiltonian": [[0, 0], [0, 0]], "dephasing_rates": [150, 150]},
  "dataset": {"n_train": 4, "n_val": 2},
  "model": {"n_fourier_layers": 1, "modes_kmax": 4, "hidden_channels": 4, "projection_hidden": 8},
  "train": {"epochs": 1, "batch_size": 2, "onthefly_samples": 2, "checkpoint_every": 1},
  "seed": 5
}"#;

#[test]
fn default_config_round_trips_byte_identically() {
    let text = ok(&["info", "--default-config"]);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, &text).unwrap();
    let back = ok(&["info", "--config", p.to_str().unwrap()]);
    assert_eq!(back, text);
    ok(&["gen-data", "--config", p.to_str().unwrap(), "--n-train", "1", "--n-val", "1", "--out-dir", dir.path().to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["system"]["name"], "fmo7");
}

#[test]
fn gen_data_default_sizes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let a = dir.path().join("a.nqd");
    let b = dir.path().join("b.nqd");
    let msg = ok(&["gen-data", "--out", a.to_str().unwrap()]);
    assert!(msg.contains("200 train + 200 validation"), "{msg}");
    assert!(msg.contains("51 points"), "{msg}");
    ok(&["gen-data", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let msg = ok(&["gen-data", "--n-train", "1", "--n-val", "1", "--out-dir", d, "--seed", "4"]);
    assert!(msg.contains("1 train + 1 validation"), "{msg}");
    let info = ok(&["info", "--dataset", dir.path().join("dataset.nqd").to_str().unwrap()]);
    assert!(info.contains("1 train, 1 validation"), "{info}");
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["gen-data", "--n-train", "1", "--n-val", "1"])
        .env("NQP_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("dataset.nqd").exists());
    assert!(dir.path().join("manifest-gen-data.json").exists());
}

#[test]
fn train_smoke_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["gen-data", "--config", c, "--out-dir", d]);
    let data = dir.path().join("dataset.nqd");
    ok(&["train", "--config", c, "--dataset", data.to_str().unwrap(), "--out-dir", d]);
    for f in ["best.nqp", "final.nqp", "optimizer.nqa", "loss.csv", "loss.json", "manifest-train.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    ok(&["train", "--config", c, "--dataset", data.to_str().unwrap(), "--out-dir", d, "--epochs", "3", "--resume"]);
    let epochs: Vec<f64> = csv_rows(&dir.path().join("loss.csv")).iter().map(|r| r[0]).collect();
    assert_eq!(epochs, vec![1.0, 2.0, 3.0]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest-train.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    let val = ok(&["validate", "--checkpoint", dir.path().join("best.nqp").to_str().unwrap(), "--dataset", data.to_str().unwrap(), "--out-dir", d]);
    assert!(val.contains("2 samples"), "{val}");
    assert_eq!(csv_rows(&dir.path().join("validation.csv")).len(), 2);

    let pop = dir.path().join("fno.csv");
    ok(&["propagate", "--config", c, "--backend", "fno", "--checkpoint", dir.path().join("best.nqp").to_str().unwrap(), "--windows", "3", "--out", pop.to_str().unwrap()]);
    assert_eq!(csv_rows(&pop).len(), 151);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fno.csv.json")).unwrap()).unwrap();
    assert_eq!(side["backend"], "fno");
    assert_eq!(side["checkpoint_sha256"].as_str().unwrap().len(), 64);

    // a resumed run must refuse an architecture change
    let bigger = SMALL.replace("\"hidden_channels\": 4", "\"hidden_channels\": 6");
    std::fs::write(&cfg, bigger).unwrap();
    let out = nqp(&["train", "--config", c, "--dataset", data.to_str().unwrap(), "--out-dir", d, "--epochs", "4", "--resume"]);
    assert!(!out.status.success());
}

#[test]
fn propagate_fmo_populations() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("p1.csv");
    ok(&["propagate", "--state", "site:1", "--backend", "rk4", "--windows", "50", "--out", p1.to_str().unwrap()]);
    let rows = csv_rows(&p1);
    assert_eq!(rows.len(), 2501);
    assert_eq!(&rows[0][1..], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    for r in &rows {
        let s: f64 = r[1..].iter().sum();
        assert!((s - 1.0).abs() <= 1e-6);
    }
    assert!((rows[2500][0] - 1500.0).abs() < 1e-9);
    let p6 = dir.path().join("p6.csv");
    ok(&["propagate", "--state", "site:6", "--windows", "2", "--out", p6.to_str().unwrap()]);
    assert_eq!(csv_rows(&p6)[0][6], 1.0);
    let mixed = dir.path().join("m.csv");
    ok(&["propagate", "--state", "mixed", "--windows", "1", "--out", mixed.to_str().unwrap()]);
}

#[test]
fn tcf_identity_is_zero_and_backends_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    ok(&["tcf", "--order", "1", "--operator", "identity", "--t1-windows", "5", "--out", &p("id.csv")]);
    assert!(csv_rows(Path::new(&p("id.csv"))).iter().all(|r| r[1] == 0.0 && r[2] == 0.0));

    ok(&["tcf", "--order", "1", "--backend", "rk4", "--out", &p("rk4.csv")]);
    ok(&["tcf", "--order", "1", "--backend", "expm", "--out", &p("expm.csv")]);
    let a = csv_rows(Path::new(&p("rk4.csv")));
    let b = csv_rows(Path::new(&p("expm.csv")));
    assert_eq!(a.len(), 2501);
    let scale = b.iter().fold(0.0_f64, |m, r| m.max(r[1].abs()));
    let dev = a.iter().zip(&b).fold(0.0_f64, |m, (x, y)| m.max((x[1] - y[1]).abs()).max((x[2] - y[2]).abs()));
    assert!(dev <= 1e-6 * scale, "relative {}", dev / scale);

    let spec = ok(&["spectrum", "--input", &p("expm.csv"), "--normalize", "--out", &p("s.csv")]);
    assert!(spec.contains("2501 x 1 bins"), "{spec}");
    let s = csv_rows(Path::new(&p("s.csv")));
    let max = s.iter().fold(0.0_f64, |m, r| m.max(r[1].abs()));
    assert!((max - 1.0).abs() < 1e-15);
}

#[test]
fn second_order_desk_grid_reports_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r2.csv");
    let msg = ok(&["tcf", "--order", "2", "--backend", "rk4", "--out", out.to_str().unwrap()]);
    assert!(msg.contains("101 x 101 points"), "{msg}");
    assert_eq!(csv_rows(&out).len(), 101 * 101);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r2.csv.json")).unwrap()).unwrap();
    assert!(side["seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(side["t2"]["points"], 101);
    ok(&["spectrum", "--input", out.to_str().unwrap()]);
    assert!(dir.path().join("r2-spectrum.csv").exists());
}

#[test]
fn failures_are_single_line_with_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "sedd": 2}"#).unwrap();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["gen-data", "--config", bad.to_str().unwrap()], "E_CONFIG"),
        (vec!["tcf", "--order", "3"], "E_USAGE"),
        (vec!["propagate", "--backend", "euler"], "E_USAGE"),
        (vec!["propagate", "--backend", "fno"], "E_CONFIG"),
        (vec!["propagate", "--state", "site:9", "--windows", "1"], "E_DOMAIN"),
        (vec!["spectrum", "--input", "/nonexistent/tcf.csv"], "E_IO"),
        (vec!["validate", "--checkpoint", bad.to_str().unwrap(), "--dataset", bad.to_str().unwrap()], "E_FORMAT"),
    ];
    for (args, code) in cases {
        let out = nqp(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error[")).collect();
        assert_eq!(lines.len(), 1, "{args:?}: {err}");
        assert!(lines[0].starts_with(&format!("error[{code}]: ")), "{args:?}: {err}");
        assert!(!err.lines().any(|l| !l.starts_with("error[") && !l.starts_with("[WARN")), "{err}");
    }
}

#[test]
fn train_grid_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, SMALL).unwrap();
    ok(&["gen-data", "--config", cfg.to_str().unwrap(), "--out-dir", d]);
    std::fs::write(&cfg, SMALL.replace("\"seed\": 5", "\"seed\": 5, \"grid\": {\"t_max\": 30.0, \"n_steps\": 40}")).unwrap();
    let out = nqp(&["train", "--config", cfg.to_str().unwrap(), "--dataset", dir.path().join("dataset.nqd").to_str().unwrap(), "--out-dir", d]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[E_CONFIG]: grid mismatch"));
}

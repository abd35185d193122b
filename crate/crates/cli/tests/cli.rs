use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wgf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgf"))
        .args(args)
        .env("WGFLOW_OUT_DIR", dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn w2_of_unit_translation_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(dir.path(), &["w2", "--a", "gauss:0,1", "--b", "gauss:1,1", "--n", "4096", "--m", "16384"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 1.0).abs() < 1e-4, "{d}");
    let m = json(&dir.path().join("w2_manifest.json"));
    assert_eq!(m["command"], "w2");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["seed"].is_null());
    assert_eq!(m["config"]["m"], 16384);
    let exact = json(&dir.path().join("w2.json"))["w2"].as_f64().unwrap();
    assert!((exact - d).abs() < 1e-6);
}

#[test]
fn gamma_gap_shrinks_with_tau() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(
        dir.path(),
        &[
            "gamma",
            "--potential",
            "quadratic:1",
            "--rho0",
            "gauss:1,1",
            "--rho1",
            "gauss:0.8,1",
            "--taus",
            "0.2,0.1,0.05,0.025",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("gamma.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau,method,J,action_term,fisher_term,delta_F,W2sq,gamma_gap,first_order_gap,iters,marginal_err"
    );
    let gaps: Vec<f64> = lines.map(|l| l.split(',').nth(7).unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1].abs() < w[0].abs()), "{gaps:?}");
}

#[test]
fn validate_potential_reports_quartic_class() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(dir.path(), &["validate-potential", "--potential", "quartic:1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("subquadratic: FAIL"), "{out}");
    assert!(out.contains("superquadratic: PASS"), "{out}");
}

#[test]
fn jko_csv_schema_and_manifest_replay() {
    let a = tempfile::tempdir().unwrap();
    let o = wgf(
        a.path(),
        &["jko", "--rho0", "gauss:1,0.6", "--potential", "quadratic:1", "--steps", "4", "--m", "300"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read(a.path().join("jko.csv")).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("k,t,F,W2_step,grad_norm,iters\n"));
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 6);

    let b = tempfile::tempdir().unwrap();
    let manifest = a.path().join("jko_manifest.json");
    let o = wgf(b.path(), &["jko", "--config", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(b.path().join("jko.csv")).unwrap(), first);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"rho0": "gauss:0,1", "tau": 0.2, "steps": 2, "m": 100}"#).unwrap();
    let o = wgf(dir.path(), &["jko", "--config", cfg.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&dir.path().join("jko_manifest.json"));
    assert_eq!(m["config"]["steps"], 3);
    assert_eq!(m["config"]["tau"], 0.2);
}

#[test]
fn unknown_config_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"rho0": "gauss:0,1", "tua": 0.2, "stpes": 2}"#).unwrap();
    let o = wgf(dir.path(), &["jko", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stpes, tua"), "{}", stderr(&o));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["w2", "--a", "gauss:0", "--b", "gauss:1,1"],
        vec!["w2", "--a", "gauss:0,1"],
        vec!["jko", "--rho0", "gauss:0,1", "--potential", "cubic:1"],
        vec!["nonsense"],
        vec!["rate", "--rho0", "gauss:0,1", "--rho1", "gauss:0,1", "--tau", "0.001"],
    ] {
        let o = wgf(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(
        dir.path(),
        &[
            "rate", "--method", "static", "--rho0", "uniform:-1,0", "--rho1", "gauss:6,0.3", "--tau", "0.01", "--n", "512",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn fpe_manifest_and_path_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(
        dir.path(),
        &["fpe", "--rho0", "gauss:1,0.6", "--potential", "quadratic:1", "--snapshots", "0.1,0.25", "--n", "256"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&dir.path().join("fpe_manifest.json"));
    let run = &m["run"];
    for key in ["potential", "kappa", "grid", "dt", "t_end", "snapshots"] {
        assert!(!run[key].is_null(), "{key}");
    }
    assert_eq!(run["grid"]["n"], 256);
    let path = fs::read_to_string(dir.path().join("fpe_path.csv")).unwrap();
    assert!(path.starts_with("t,x,rho\n"));
    assert_eq!(path.lines().count(), 1 + 4 * 256);
}

#[test]
fn density_files_are_read_and_left_alone() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(dir.path(), &["splice", "--rho0", "gauss:0,1.5", "--rho1", "gauss:0.5,0.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let file = dir.path().join("splice.csv");
    let before = fs::read(&file).unwrap();
    let spec = format!("file:{}", file.display());
    let o = wgf(dir.path(), &["functionals", "--rho", &spec]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(&file).unwrap(), before);
    let f = json(&dir.path().join("functionals.json"));
    assert!(f["fisher_information"].as_f64().unwrap() > 0.0);
    assert_eq!(json(&dir.path().join("functionals_manifest.json"))["run"]["grid"]["n"], 2048);
}

#[test]
fn particles_rows_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = wgf(dir.path(), &["particles", "--rho0", "gauss:0,1", "--ns", "100,400", "--seed", "7", "--dump"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("particles.csv")).unwrap();
    assert!(text.starts_with("N,seed,tau,w2_error\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    let ens = fs::read_to_string(dir.path().join("ensemble.csv")).unwrap();
    assert!(ens.starts_with("k,x\n"));
    assert_eq!(ens.lines().count(), 401);
    assert_eq!(json(&dir.path().join("particles_manifest.json"))["seed"], 7);
}

#[test]
fn out_dir_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = wgf(
        env_dir.path(),
        &["w2", "--a", "gauss:0,1", "--b", "gauss:0,2", "--out-dir", flag_dir.path().to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.path().join("w2.json").exists());
    assert!(!env_dir.path().join("w2.json").exists());
}

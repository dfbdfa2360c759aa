use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn g2hbt(args: &[&str]) -> Output {
    g2hbt_env(args, None)
}

fn g2hbt_env(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_g2hbt"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(first column, g2)` rows of a curve CSV.
fn rows(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn analytic_coherent_is_flat() {
    let o = g2hbt(&["analytic", "--vplus", "1", "--vminus", "1", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 301);
    assert!(r.iter().all(|&(_, g)| g == 1.0));
}

#[test]
fn analytic_thermal_bunching() {
    let o = g2hbt(&["analytic", "--vplus", "12.80", "--vminus", "1.039", "--alpha", "0.258", "--tau-steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert!((r[0].1 - 2.9861869877697775).abs() < 1e-12);
}

#[test]
fn analytic_json_format() {
    let o = g2hbt(&["analytic", "--r", "0.5", "--format", "json", "--tau-steps", "2", "--tau-max", "0"]);
    assert_eq!(o.status.code(), Some(2), "repeated tau = 0 grid is rejected");
    let o = g2hbt(&["analytic", "--r", "0.5", "--format", "json", "--tau-steps", "1", "--tau-max", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = v["curve"]["points"][0]["g2"].as_f64().unwrap();
    assert!((g - 6.682694376831169).abs() < 1e-10);
    assert_eq!(v["config"]["state"]["alpha"], 0.0);
}

#[test]
fn vacuum_is_a_domain_error() {
    let o = g2hbt(&["analytic", "--vplus", "1", "--vminus", "1", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("g2 undefined for vacuum"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(g2hbt(&["analytic", "--bogus"]).status.code(), Some(2));
    assert_eq!(g2hbt(&["scenario", "fig9"]).status.code(), Some(2));
    assert_eq!(g2hbt(&["analytic", "--vplus", "0.5", "--vminus", "1"]).status.code(), Some(2));
    assert_eq!(g2hbt(&["simulate", "--vplus", "2", "--vminus", "1", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(
        g2hbt(&["scenario", "loss", "--vplus", "2", "--vminus", "1"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[simulation]\nsampels = 3\n").unwrap();
    let o = g2hbt(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampels"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[state]\nv_plus = 3.0\nv_minus = 3.0\nalpha = 0.0\n[tau]\nsteps = 5\n").unwrap();
    let o = g2hbt(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5);
    assert!((r[0].1 - 2.0).abs() < 1e-12);
    let o = g2hbt(&["analytic", "--config", cfg.to_str().unwrap(), "--tau-steps", "3"]);
    assert_eq!(rows(&stdout(&o)).len(), 3);
}

#[test]
fn scenario_is_byte_identical_across_thread_counts() {
    let args = |out: &str| {
        vec![
            "scenario".to_string(),
            "fig4".into(),
            "--seed".into(),
            "7".into(),
            "--samples".into(),
            "10000".into(),
            "--runs".into(),
            "3".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, threads| {
        let args = args(out.to_str().unwrap());
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = g2hbt_env(&args, Some(threads));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(&a, 1);
    run(&b, 4);
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    assert_eq!(ca.len(), 10);
    assert_eq!(ca, cb);
}

#[test]
fn rerun_from_embedded_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = g2hbt(&[
        "scenario",
        "loss",
        "--samples",
        "10000",
        "--seed",
        "3",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let expected = dir_contents(&first);

    for source in ["loss_simulated.csv", "resolved_config.toml", "summary.json"] {
        let again = dir.path().join(source);
        let o = g2hbt(&[
            "scenario",
            "--config",
            first.join(source).to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{source}: {}", stderr(&o));
        assert_eq!(dir_contents(&again), expected, "re-run from {source}");
    }
}

#[test]
fn simulate_export_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let data = dir.path().join("data");
    let est = dir.path().join("est");
    let common = ["--vplus", "4", "--vminus", "1", "--alpha", "0.3", "--samples", "10000", "--runs", "3", "--seed", "5"];
    let mut args = vec!["simulate"];
    args.extend(common);
    args.extend(["--out", out.to_str().unwrap(), "--export", data.to_str().unwrap()]);
    let o = g2hbt(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(data.join("manifest.json").exists());
    assert!(data.join("pm_run002_c.g2ts").exists());

    let o = g2hbt(&["estimate", "--data", data.to_str().unwrap(), "--out", est.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sim = rows(&fs::read_to_string(out.join("simulated.csv")).unwrap());
    let re = rows(&fs::read_to_string(est.join("estimated.csv")).unwrap());
    assert_eq!(sim, re);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(est.join("summary.json")).unwrap()).unwrap();
    let v_plus = summary["recovered"]["v_plus"].as_f64().unwrap();
    assert!((v_plus - 4.0).abs() < 0.3, "{v_plus}");
}

#[test]
fn superbunching_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = g2hbt(&["scenario", "superbunch", "--samples", "20000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("ill-conditioned"));
    let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("ill_conditioned"));
}

#[test]
fn oracle_agrees() {
    let o = g2hbt(&["oracle", "--r", "0.0516", "--alpha", "0.287"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let closed = v["closed_form"].as_f64().unwrap();
    for key in ["moment_oracle", "pure_formula", "fock_oracle"] {
        assert!((v[key].as_f64().unwrap() - closed).abs() < 1e-9, "{key}");
    }
}

#[test]
fn verify_passes_and_detects_mutation() {
    let o = g2hbt(&["verify", "--grid", "coarse"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    let o = g2hbt(&["verify", "--mutate"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
}

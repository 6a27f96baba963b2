use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fmmt_cli::report::{parse_report, report_json};

fn fmmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmmt"))
        .args(args)
        .env_remove("FMMT_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_data(dir: &Path) -> String {
    let mut text = String::from("x,y\n");
    for i in 0..40 {
        let x = (i as f64 + 0.5) / 40.0;
        let noise = 0.05 * (37.0 * i as f64).sin();
        text.push_str(&format!("{x},{}\n", x.exp() + noise));
    }
    let path = dir.join("field.csv");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn test_command_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("out");
    let o = fmmt(&[
        "test",
        "--data",
        &data,
        "--simulator",
        "builtin:exp-linear",
        "--split",
        "3",
        "--plots",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = parse_report(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!((0.0..=1.0).contains(&report.global.p_value));
    assert_eq!(report.n, 40);
    assert_eq!(report.subdomains.as_ref().unwrap().reports.len(), 3);
    let csv = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(csv.lines().count() > report.global.coefficients.len());
    assert!(out.join("fit.svg").exists() && out.join("subdomain_pvalues.svg").exists());
}

#[test]
fn reports_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("out");
    let o = fmmt(&[
        "test",
        "--data",
        &data,
        "--simulator",
        "const-linear",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let parsed = parse_report(&text).unwrap();
    assert_eq!(report_json(&parsed), text);
}

#[test]
fn malformed_row_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,y\n0.1,1.0\n0.2,1.1\n0.3,oops\n0.4,1.2\n").unwrap();
    let o = fmmt(&[
        "test",
        "--data",
        path.to_str().unwrap(),
        "--simulator",
        "builtin:exp-linear",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmt(&[
        "simulate",
        "--scenario",
        "no-such-thing",
        "--reps",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("const-linear") && err.contains("quad-1-modulation"),
        "{err}"
    );
}

#[test]
fn missing_simulator_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let o = fmmt(&[
        "test",
        "--data",
        &data,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = fmmt(&["test", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = fmmt(&[
            "simulate",
            "--scenario",
            "const-sin",
            "--reps",
            "3",
            "--c",
            "-1,0,1",
            "--seed",
            "5",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            fs::read(out.join("power_table.tsv")).unwrap(),
            fs::read(out.join("power_table.json")).unwrap(),
            fs::read(out.join("curves/global.tsv")).unwrap(),
        )
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "2"));
}

#[test]
fn flags_override_environment_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fmmt.toml");
    fs::write(&cfg, "alpha = 0.1\nseed = 9\nreps = 2\nc = 0.5\n").unwrap();
    let run = |name: &str, extra: &[&str], env_seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fmmt"));
        cmd.args(["simulate", "--scenario", "sin-scale", "--config"])
            .arg(&cfg)
            .args(["--out", out.to_str().unwrap()])
            .args(extra)
            .env_remove("FMMT_SEED");
        if let Some(s) = env_seed {
            cmd.env("FMMT_SEED", s);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        json(&out.join("power_table.json"))
    };
    let file_only = run("file", &[], None);
    assert_eq!(file_only["alpha"], 0.1);
    assert_eq!(file_only["seed"], 9);
    assert_eq!(file_only["reps"], 2);
    assert_eq!(file_only["rows"][0]["c"], 0.5);

    let env = run("env", &[], Some("11"));
    assert_eq!(env["seed"], 11);

    let flags = run("flags", &["--seed", "12", "--alpha", "0.2"], Some("11"));
    assert_eq!(flags["seed"], 12);
    assert_eq!(flags["alpha"], 0.2);
    assert_eq!(flags["reps"], 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fmmt.toml");
    fs::write(&cfg, "alpah = 0.1\n").unwrap();
    let o = fmmt(&[
        "simulate",
        "--scenario",
        "sin-scale",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn shear_layer_case_study_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shear");
    let o = fmmt(&["shear-layer", "--plots", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = parse_report(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.global.p_value < 0.01, "{}", report.global.p_value);
    assert_eq!(report.subdomains.unwrap().reports.len(), 6);
    assert!(out.join("shear_layer.svg").exists());
}

#[test]
fn scenarios_are_listed() {
    let o = fmmt(&["scenarios"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .count()
            >= 14
    );
    assert!(text.contains("multi-quad-modulation"));
}

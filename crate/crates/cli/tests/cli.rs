//! End-to-end tests of the binary: exit codes, output formats, determinism.

use sdof_galerkin::closed_form::p3_undamped_step;
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdof"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sdof-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn simulate_matches_closed_form_and_reports_oracle_error() {
    let cfg = tmp("free.json");
    std::fs::write(
        &cfg,
        r#"{"system":{"c":0.0,"k":1.0},"p":3,"h":0.1,"l":20,"x0":1.0,"v0":0.0}"#,
    )
    .unwrap();
    let json = tmp("free-summary.json");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();

    let (mut x, mut v) = (1.0, 0.0);
    for _ in 0..20 {
        (x, v) = p3_undamped_step(x, v, 0.1, 1.0, 0.0);
    }
    assert!((doc["final"]["x"].as_f64().unwrap() - x).abs() < 1e-12);
    assert!((doc["final"]["v"].as_f64().unwrap() - v).abs() < 1e-12);
    // Exact oracle applies to free vibration, so error norms are present and small.
    let max_err = doc["error"]["x_max_over_steps"].as_f64().unwrap();
    assert!(max_err > 0.0 && max_err < 1e-3, "max_err={max_err}");
    // The config echo reflects the file.
    assert_eq!(doc["config"]["l"].as_u64().unwrap(), 20);
}

#[test]
fn flags_override_config_file() {
    let cfg = tmp("override.json");
    std::fs::write(
        &cfg,
        r#"{"system":{"c":0.0,"k":1.0},"p":3,"h":0.1,"l":20,"x0":1.0,"v0":0.0}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--l", "5", "--k", "4"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["l"].as_u64().unwrap(), 5);
    assert_eq!(doc["config"]["system"]["k"].as_f64().unwrap(), 4.0);
    assert_eq!(doc["final"]["t"].as_f64().unwrap(), 0.5);
}

#[test]
fn zero_data_run_emits_all_zero_rows() {
    let csv = tmp("zero.csv");
    let out = run(&["simulate", "--p", "4", "--h", "0.5", "--l", "3", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows = 0;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("step,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        for v in &fields[2..] {
            assert_eq!(*v, "0", "line {line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 1 + 3 * 16);
}

#[test]
fn csv_header_carries_seed_and_config() {
    let csv = tmp("header.csv");
    let out = run(&[
        "simulate", "--p", "3", "--h", "0.2", "--l", "1", "--seed", "11", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# seed = 11");
    let cfg_line = lines.next().unwrap();
    assert!(cfg_line.starts_with("# config = {"), "{cfg_line}");
    // The echoed config re-parses and reflects the flags.
    let echoed: Value = serde_json::from_str(cfg_line.trim_start_matches("# config = ")).unwrap();
    assert_eq!(echoed["p"].as_u64().unwrap(), 3);
    assert_eq!(echoed["seed"].as_u64().unwrap(), 11);
    assert_eq!(lines.next().unwrap(), "step,t,x,v,ME,ME_c");
}

#[test]
fn study_angles_is_deterministic_and_anchored() {
    let a = tmp("angles-a.json");
    let b = tmp("angles-b.json");
    for path in [&a, &b] {
        let out = run(&[
            "study-angles",
            "--p-list",
            "3",
            "--c-list",
            "0",
            "--h-over-t-list",
            "1",
            "--samples",
            "500",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must give identical bytes");

    let doc: Value = serde_json::from_slice(&bytes_a).unwrap();
    let cell = &doc["cells"]["p=3,c=0,h_over_T=1"];
    let s_h_worst = cell["s_h"]["worst"].as_f64().unwrap();
    assert!((s_h_worst - 2.255).abs() < 0.3, "s_h_worst={s_h_worst}");
    // One-dimensional zero-IC span at p=3: the non-homogeneous exponent is exact.
    let s_nh_worst = cell["s_nh"]["worst"].as_f64().unwrap();
    assert!((s_nh_worst - (-0.9561)).abs() < 1e-3, "s_nh_worst={s_nh_worst}");
    assert_eq!(cell["n_samples"].as_u64().unwrap(), 500);
    assert_eq!(doc["seed"].as_u64().unwrap(), 7);
}

#[test]
fn study_angles_different_seed_changes_sampled_fields() {
    let run_with = |seed: &str| -> Value {
        let out = run(&[
            "study-angles", "--p-list", "4", "--samples", "200", "--seed", seed,
        ]);
        assert_eq!(code(&out), 0);
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let a = run_with("1");
    let b = run_with("2");
    let get = |d: &Value| d["cells"]["p=4,c=0,h_over_T=1"]["s_h"]["mean"].as_f64().unwrap();
    assert_ne!(get(&a), get(&b));
}

#[test]
fn study_angles_requires_seed() {
    let out = run(&["study-angles", "--p-list", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn validation_failures_exit_1() {
    let out = run(&["simulate", "--p", "2", "--h", "0.1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p"));

    let out = run(&["simulate", "--p", "3", "--h", "0.1", "--h-over-t", "0.5"]);
    assert_eq!(code(&out), 1);

    let cfg = tmp("broken.json");
    std::fs::write(&cfg, "{\"system\":{\"c\":0.0,\"k\":1.0},\n\"p\":oops}").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    // serde_json diagnostics carry line and column.
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{:?}", out.stderr);
}

#[test]
fn numerical_failures_exit_2() {
    // p = 70 warns (> 25) and then overflows the exact combinatorics.
    let out = run(&["simulate", "--p", "70", "--h", "0.1", "--l", "1"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warning"), "{err}");
}

#[test]
fn verify_p3_passes() {
    let out = run(&["verify-p3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn study_legendre_format_and_determinism() {
    let run_once = || -> Vec<u8> {
        let out = run(&["study-legendre", "--p-min", "3", "--p-max", "6"]);
        assert_eq!(code(&out), 0);
        out.stdout
    };
    let a = run_once();
    assert_eq!(a, run_once());
    let text = String::from_utf8_lossy(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config"));
    assert_eq!(lines.next().unwrap(), "p,m,s");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 4);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let s: f64 = fields[2].parse().unwrap();
        assert!(s.is_finite());
    }

    let out = run(&["study-legendre", "--p-max", "26"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn project_error_reports_decay_slope() {
    let out = run(&["project-error"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let slope_line = text.lines().find(|l| l.starts_with("# slope_in_p")).unwrap();
    let slope: f64 = slope_line.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!((-2.2..=-1.5).contains(&slope), "slope={slope}");

    let out = run(&["project-error", "--corner", "1.5"]);
    assert_eq!(code(&out), 1);
}

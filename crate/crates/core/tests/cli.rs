use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn cvclone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvclone"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = cvclone(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(bytes: &[u8]) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(bytes).records().map(|r| r.unwrap()).collect()
}

fn close(v: &Value, want: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= tol
}

#[test]
fn single_pass_reports_two_thirds() {
    let r = json(&["run", "--protocol", "single-pass", "--alpha", "1,2", "--format", "json"]);
    for c in r["clones"].as_array().unwrap() {
        assert!(close(&c["fidelity"], 2.0 / 3.0, 1e-12));
        assert!(close(&c["analytic_fidelity"], 2.0 / 3.0, 1e-15));
        assert!(c["fidelity_abs_diff"].as_f64().unwrap() <= 1e-12);
        assert!(close(&c["mean"][0], 1.0, 1e-12));
        assert!(close(&c["mean"][1], 2.0, 1e-12));
    }
    assert_eq!(r["mode"], "deterministic");
}

#[test]
fn asymmetric_quarter() {
    let r = json(&["run", "--protocol", "asymmetric", "--V", "0.25", "--format", "json"]);
    assert!(close(&r["clones"][0]["fidelity"], 0.8, 1e-12));
    assert!(close(&r["clones"][1]["fidelity"], 0.5, 1e-12));
}

#[test]
fn negative_alpha_is_accepted() {
    let r = json(&["run", "--protocol", "two-pass", "--alpha", "-5,3", "--format", "json"]);
    assert!(close(&r["clones"][0]["mean"][0], -5.0, 1e-12));
    assert!(close(&r["residual_light"]["mean"][0], 5.0, 1e-12));
}

#[test]
fn two_pass_csv_row() {
    let out = cvclone(&["run", "--protocol", "two-pass", "--alpha", "0,0", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("schema,"));
    let rows = csv_rows(text.as_bytes());
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], cvclone::cli::CSV_SCHEMA);
    let headers: Vec<&str> = header.split(',').collect();
    let col = |name: &str| headers.iter().position(|h| *h == name).unwrap();
    let fa: f64 = rows[0][col("f_a")].parse().unwrap();
    let fb: f64 = rows[0][col("f_b")].parse().unwrap();
    assert!((fa - 2.0 / 3.0).abs() <= 1e-12 && (fb - 2.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn v_sweep_table() {
    let out = cvclone(&[
        "sweep", "--protocol", "asymmetric", "--param", "V", "--from", "0.05", "--to", "0.5", "--step", "0.05",
        "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for row in &rows {
        let v: f64 = row[col("value")].parse().unwrap();
        let fa: f64 = row[col("f_a")].parse().unwrap();
        let fb: f64 = row[col("f_b")].parse().unwrap();
        let fa_diff: f64 = row[col("f_a_abs_diff")].parse().unwrap();
        assert!((fa - 1.0 / (1.0 + v)).abs() <= 1e-12);
        assert!((fb - 4.0 * v / (4.0 * v + 1.0)).abs() <= 1e-12);
        assert!(fa_diff <= 1e-12);
    }
}

#[test]
fn kappa_sweep_peaks_at_design_point() {
    let r = json(&[
        "sweep", "--protocol", "single-pass", "--param", "kappa", "--from", "0.5", "--to", "1.5", "--step", "0.1",
        "--format", "json",
    ]);
    let points = r.as_array().unwrap();
    assert_eq!(points.len(), 11);
    let best = points
        .iter()
        .max_by(|a, b| {
            let f = |p: &Value| p["report"]["clones"][0]["universal_fidelity"].as_f64().unwrap();
            f(a).total_cmp(&f(b))
        })
        .unwrap();
    assert_eq!(best["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn empty_range_exits_2() {
    let out = cvclone(&["sweep", "--param", "kappa", "--from", "1.5", "--to", "0.5", "--step", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty sweep"));
}

#[test]
fn bad_config_exits_2() {
    assert_eq!(cvclone(&["run", "--protocol", "asymmetric", "--V", "0"]).status.code(), Some(2));
    assert_eq!(cvclone(&["run", "--protocol", "triple-pass"]).status.code(), Some(2));
    assert_eq!(cvclone(&["run", "--alpha", "1"]).status.code(), Some(2));
    assert_eq!(cvclone(&["run", "--protocol", "squeeze-prep", "--V", "0.6"]).status.code(), Some(2));
    assert_eq!(cvclone(&["run", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(2));
}

#[test]
fn numeric_breakdown_exits_3() {
    let out = cvclone(&["run", "--protocol", "asymmetric", "--V", "1e-12"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant violated"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, "protocol = \"asymmetric\"\nasymmetry_v = 2.0\ninput_alpha = [1.0, -1.0]\n").unwrap();
    let p = path.to_str().unwrap();
    let r = json(&["run", "--config", p, "--format", "json"]);
    assert!(close(&r["clones"][0]["fidelity"], 1.0 / 3.0, 1e-12));
    let r = json(&["run", "--config", p, "--V", "0.25", "--format", "json"]);
    assert!(close(&r["clones"][0]["fidelity"], 0.8, 1e-12));
    assert!(close(&r["input_alpha"][1], -1.0, 0.0));

    let jpath = dir.path().join("cfg.json");
    fs::write(&jpath, r#"{"protocol": "two-pass", "input_alpha": [3.0, 4.0]}"#).unwrap();
    let r = json(&["run", "--config", jpath.to_str().unwrap(), "--format", "json"]);
    assert_eq!(r["protocol"], "two-pass");
    assert!(close(&r["clones"][1]["mean"][1], 4.0, 1e-12));
}

#[test]
fn report_written_to_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = cvclone(&[
            "run", "--protocol", "single-pass", "--alpha", "1,2", "--seed", "17", "--trials", "500", "--format",
            "json", "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(r["mode"], "sampled");
    assert_eq!(r["seed"], 17);
    assert!(r["clones"][0]["fidelity_std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn montecarlo_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let summary = dir.path().join("summary.json");
    let args = [
        "montecarlo", "--protocol", "single-pass", "--alpha", "1,2", "--trials", "2000", "--seed", "5", "--out",
        log.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ];
    assert!(cvclone(&args).status.success());
    let first = fs::read(&log).unwrap();
    assert!(cvclone(&args).status.success());
    assert_eq!(first, fs::read(&log).unwrap());

    let lines: Vec<Value> = first
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2000);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["trial"], i as u64);
        assert!(l["outcome"].is_f64());
        assert_eq!(l["clone_cov_digest"].as_str().unwrap().len(), 16);
    }
    let s: Value = serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    assert_eq!(s["distinct_covariances"], 1);
    for c in s["clones"].as_array().unwrap() {
        let se = c["mean_std_error"][1].as_f64().unwrap();
        assert!((c["empirical_mean"][1].as_f64().unwrap() - 2.0).abs() <= 4.0 * se);
        assert!(c["fidelity_abs_diff"].is_f64());
    }
}

#[test]
fn montecarlo_single_trial_is_one_line() {
    let out = cvclone(&["montecarlo", "--trials", "1", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["trials"], 1);
}

#[test]
fn feasibility_examples() {
    let pass = json(&["feasibility", "--kappa", "1", "--optical-density", "100", "--format", "json"]);
    assert_eq!(pass["eta"], 0.01);
    assert_eq!(pass["bound"], 0.5);
    assert_eq!(pass["feasible"], true);
    let fail = json(&["feasibility", "--kappa", "1", "--optical-density", "2", "--format", "json"]);
    assert_eq!(fail["eta"], 0.5);
    assert_eq!(fail["feasible"], false);
    let zero = json(&["feasibility", "--kappa", "0", "--optical-density", "0.5", "--format", "json"]);
    assert_eq!(zero["eta"], 0.0);
    assert_eq!(zero["feasible"], true);
}

#[test]
fn feasibility_from_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coupling.toml");
    fs::write(
        &path,
        "optical_density = 50.0\n[coupling.physical]\nlambda = 852e-9\ngamma = 3.3e7\ndelta = 1e9\nbeam_area = 1e-6\nn_l = 1e12\nn_a = 1e12\n",
    )
    .unwrap();
    let r = json(&["feasibility", "--params", path.to_str().unwrap(), "--format", "json"]);
    let sigma = 852e-9f64.powi(2) / (2.0 * std::f64::consts::PI);
    let kappa = sigma * 3.3e7 / (1e-6 * 1e9) * 1e12 / 2.0;
    assert!((r["kappa"].as_f64().unwrap() - kappa).abs() <= 1e-12 * kappa);
    let out = cvclone(&["feasibility", "--params", path.to_str().unwrap(), "--format", "csv"]);
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], cvclone::cli::CSV_SCHEMA);
}

#[test]
fn feasibility_missing_inputs_exit_2() {
    assert_eq!(cvclone(&["feasibility", "--kappa", "1"]).status.code(), Some(2));
    assert_eq!(
        cvclone(&["feasibility", "--kappa", "1", "--optical-density", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn pretty_output_names_quantities() {
    let out = cvclone(&["run", "--protocol", "atoms-light", "--alpha", "1,1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("clone A") && text.contains("clone B"));
    assert!(text.contains("flying clone before unsqueezing"));
    let out = cvclone(&["run", "--protocol", "squeeze-prep", "--V", "0.25", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&out.stdout).len(), 1);
}

use std::path::Path;
use std::process::{Command, Output};

use charnum::atlas::grid::GridMetric;
use serde_json::Value;

fn charnum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charnum"))
        .args(args)
        .output()
        .expect("charnum runs")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

fn error_kind(out: &Output) -> String {
    json(&out.stderr)["error"].as_str().unwrap().to_string()
}

#[test]
fn sphere_euler_number() {
    let out = charnum(&["compute", "--manifold", "s2", "--poly", "euler", "--h", "0.0078125"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-2);
    assert_eq!(v["manifold"], "s2");
    assert_eq!(v["connection"], "levi_civita");
    for key in ["polynomial", "volume", "ratio", "h", "error_estimate"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn flat_torus_euler_is_zero() {
    let out = charnum(&["compute", "--manifold", "t2_flat", "--poly", "euler"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out.stdout)["value"].as_f64(), Some(0.0));
}

#[test]
fn euler_with_piecewise_euclidean_is_a_config_error() {
    let out = charnum(&["compute", "--manifold", "s2", "--poly", "euler", "--connection", "pe"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "euler_requires_metric_connection");
    assert!(out.stdout.is_empty());
}

#[test]
fn configuration_errors_exit_with_two() {
    let cases: [(&[&str], &str); 6] = [
        (&["compute", "--manifold", "klein_bottle"], "unknown_manifold"),
        (&["compute", "--manifold", "s2", "--h", "0"], "invalid_parameter"),
        (&["compute", "--manifold", "s2", "--h", "fast"], "usage"),
        (&["compute", "--manifold", "s2", "--poly", "q7"], "invalid_parameter"),
        (&["compute"], "invalid_parameter"),
        (&["verify", "everything"], "invalid_parameter"),
    ];
    for (args, kind) in cases {
        let out = charnum(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_kind(&out), kind, "{args:?}");
    }
}

#[test]
fn malformed_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "x", "dim": 2, "charts": [], "bogus": 1}"#).unwrap();
    let out = charnum(&["compute", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out.stderr)["message"].is_string());
}

fn write_spec(dir: &Path, metric: &str) -> String {
    let path = dir.join("sphere.json");
    let spec = format!(
        r#"{{
  "name": "spec_sphere",
  "dim": 2,
  "charts": [
    {{"radius": 2.5, "support": 1.25, "metric": {metric}}},
    {{"radius": 2.5, "support": 1.25, "orientation": -1, "metric": "round_sphere"}}
  ],
  "transitions": [
    {{"from": 0, "to": 1, "kind": "inversion"}},
    {{"from": 1, "to": 0, "kind": "inversion"}}
  ]
}}"#
    );
    std::fs::write(&path, spec).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn spec_sphere_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#""round_sphere""#);
    let from_spec = json(&charnum(&["compute", "--spec", &spec, "--h", "0.03125"]).stdout);
    let builtin = json(&charnum(&["compute", "--manifold", "s2", "--h", "0.03125"]).stdout);
    assert_eq!(from_spec["value"], builtin["value"]);
    assert_eq!(from_spec["manifold"], "spec_sphere");
}

#[test]
fn degenerate_grid_metric_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridMetric::new(2, 5, 2.5, vec![0.0; 25 * 4]).unwrap();
    grid.save(&dir.path().join("zero.chgrid")).unwrap();
    let spec = write_spec(dir.path(), r#"{"grid": "zero.chgrid"}"#);
    let out = charnum(&["compute", "--spec", &spec, "--h", "0.125"]);
    assert_eq!(out.status.code(), Some(3));
    let kind = error_kind(&out);
    assert!(kind == "singular_metric" || kind == "not_positive_definite", "{kind}");
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = charnum(&["compute", "--manifold", "s2", "--h", "0.0625", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v = json(&std::fs::read(&path).unwrap());
    assert_eq!(v["polynomial"], "euler");
}

#[test]
fn partition_suite_passes() {
    let out = charnum(&["verify", "partition"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out.stdout);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 10);
    assert!(checks.iter().all(|c| c["deviation"].as_f64().unwrap() <= 1e-10 || c["check"].as_str().unwrap().starts_with("min")));
}

#[test]
fn coordinate_independence_on_the_sphere() {
    let out = charnum(&["verify", "coordinate-independence", "--manifold", "s2"]);
    assert_eq!(out.status.code(), Some(0));
    for c in json(&out.stdout)["checks"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
    }
}

#[test]
fn violated_tolerance_exits_with_one() {
    // a finite-difference step of 1/8 is far too coarse for 1e-5
    let out = charnum(&["verify", "coordinate-independence", "--manifold", "s2", "--h", "0.125"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out.stdout)["passed"], false);
}

#[test]
fn mollification_on_the_sphere_decreases() {
    let out = charnum(&["verify", "mollification-convergence", "--manifold", "s2"]);
    assert_eq!(out.status.code(), Some(0));
    let checks = json(&out.stdout)["checks"].as_array().unwrap().clone();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["deviation"].as_f64().unwrap() > 0.0));
}

#[test]
fn sweep_rows_and_summary() {
    let out = charnum(&["sweep", "--family", "s2_perturbed", "--eps", "0:0.2:0.1", "--h", "0.03125", "--iota", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "family,eps,value,volume,ratio,chart_count,bound,q,q_total,error");
    assert_eq!(lines.len(), 4);
    let mut ratios = Vec::new();
    for (line, eps) in lines[1..].iter().zip(["0", "0.1", "0.2"]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], eps);
        let value: f64 = cells[2].parse().unwrap();
        let volume: f64 = cells[3].parse().unwrap();
        let ratio: f64 = cells[4].parse().unwrap();
        assert!((value - 2.0).abs() < 2e-2, "{line}");
        assert_eq!(ratio, value.abs() / volume);
        assert_eq!(cells[9], "");
        ratios.push(ratio);
    }
    let summary = json(&out.stderr);
    assert_eq!(summary["max_ratio"].as_f64().unwrap(), ratios.iter().cloned().fold(0.0, f64::max));
    assert_eq!(summary["assumptions"]["injectivity_radius_floor"], 0.5);
}

#[test]
fn sweep_is_deterministic_and_routes_summary_to_stdout_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "sweep".to_string(),
            "--family".into(),
            "t2_perturbed".into(),
            "--eps".into(),
            "0:0.2:0.1".into(),
            "--h".into(),
            "0.125".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let run = |p: &Path| {
        let v = args(p);
        charnum(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let (oa, ob) = (run(&a), run(&b));
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let summary = json(&oa.stdout);
    assert_eq!(summary["rows"], 3);
    for line in std::fs::read_to_string(&a).unwrap().lines().skip(1) {
        let value: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(value.abs() < 1e-5, "{line}");
    }
}

#[test]
fn sweep_records_degenerate_members_and_continues() {
    let out = charnum(&["sweep", "--family", "s2_perturbed", "--eps", "-1.5:0:0.5", "--h", "0.0625"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let errors: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(errors, vec!["invalid_parameter", "invalid_parameter", "", ""]);
    assert_eq!(json(&out.stderr)["failed_rows"], 2);
}

#[test]
fn unknown_family_is_a_config_error() {
    let out = charnum(&["sweep", "--family", "cp2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chart_norms_of_flat_and_perturbed() {
    let flat = json(&charnum(&["chart-norm", "--manifold", "t2_flat", "--points", "9"]).stdout);
    let entries = flat.as_array().unwrap();
    assert_eq!(entries.len(), 9);
    for e in entries {
        assert_eq!(e["q_total"].as_f64(), Some(0.0));
        assert_eq!(e["harmonic_residual"].as_f64(), Some(0.0));
    }
    let q = |name: &str| {
        json(&charnum(&["chart-norm", "--manifold", name, "--points", "17"]).stdout)
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["q_total"].as_f64().unwrap())
            .fold(0.0, f64::max)
    };
    let (round, bumped) = (q("s2"), q("s2_perturbed(0.3)"));
    assert!(round.is_finite() && bumped > round, "{round} {bumped}");
}

#[test]
fn help_exits_cleanly() {
    let out = charnum(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("compute"));
}

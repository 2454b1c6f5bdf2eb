use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pocmed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pocmed")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn simulate(dir: &Path, n: usize, seed: u64) -> String {
    let path = dir.join(format!("sim_{n}_{seed}.csv"));
    let p = path.to_str().unwrap();
    let o = pocmed(&["simulate", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p.to_string()
}

fn value(report: &Value, family: &str, quantity: &str) -> f64 {
    let blocks = report["queries"][0]["blocks"].as_array().unwrap();
    let b = blocks.iter().find(|b| b["family"] == family).unwrap_or_else(|| panic!("no {family} block"));
    let v = b["values"].as_array().unwrap().iter().find(|v| v["quantity"] == quantity).unwrap();
    v["estimate"].as_f64().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let a = pocmed(&["simulate", "--n", "50", "--seed", "3"]);
    let b = pocmed(&["simulate", "--n", "50", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("x,m,y"));
    assert_eq!(text.lines().count(), 51);
    let c = pocmed(&["simulate", "--n", "50", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_rejects_zero_rows() {
    let o = pocmed(&["simulate", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error["));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(pocmed(&["estimate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn estimate_json_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 2000, 1);
    let args = [
        "estimate", "--input", &input, "--x-base", "0", "--x-alt", "1", "--y", "1", "--replicates", "50",
        "--seed", "9", "--format", "json",
    ];
    let a = pocmed(&args);
    let b = pocmed(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);

    let r = json(&a);
    assert_eq!(r["tool"], "pocmed");
    assert_eq!(r["report_version"], 1);
    assert_eq!(r["rows"], 2000);
    let (t, nd, ni) = (value(&r, "pns", "t_pns"), value(&r, "pns", "nd_pns"), value(&r, "pns", "ni_pns"));
    assert!((t - nd - ni).abs() < 1e-12);
    assert!(t > 0.0 && t < 0.2);
    let v = &r["queries"][0]["blocks"][0]["values"][0];
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
}

#[test]
fn estimate_table_uses_percentages() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 500, 2);
    let o = pocmed(&["estimate", "--input", &input, "--x-base", "0", "--x-alt", "1", "--y", "1", "--replicates", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("T-PNS"), "{text}");
    assert!(text.contains('%'));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 800, 5);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"input": {input:?}, "replicates": 0, "format": "json",
                "queries": [{{"x_base": 0, "x_alt": 1, "y": 1}}]}}"#
        ),
    )
    .unwrap();
    let from_file = json(&pocmed(&["estimate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(from_file["queries"][0]["query"]["y"], 1.0);
    let o = pocmed(&["estimate", "--config", cfg.to_str().unwrap(), "--x-base", "0", "--x-alt", "1", "--y", "0"]);
    let flags = json(&o);
    assert_eq!(flags["queries"][0]["query"]["y"], 0.0);

    fs::write(&cfg, r#"{"nonsense": 1}"#).unwrap();
    assert_eq!(pocmed(&["estimate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn outcome_interval_evidence() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ordinal.csv");
    let mut csv = String::from("x,m,y\n");
    for i in 0..400 {
        let x = i % 2;
        let m = (i / 2) % 3;
        let y = 1 + (i * 7 + x * 3 + m) % 5;
        csv.push_str(&format!("{x},{m},{y}\n"));
    }
    fs::write(&path, csv).unwrap();
    let o = pocmed(&[
        "estimate", "--input", path.to_str().unwrap(), "--x-base", "0", "--x-alt", "1", "--y", "3",
        "--evidence-x", "1", "--y-interval", "1.5,2.5", "--replicates", "0", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let blocks = r["queries"][0]["blocks"].as_array().unwrap();
    let b = blocks.iter().find(|b| b["family"] == "pns-evidence").unwrap();
    assert!(b["case"].is_string());
    assert!(b["terms"].is_object());
}

#[test]
fn absent_treatment_level_is_a_positivity_error() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 300, 1);
    let o = pocmed(&[
        "estimate", "--input", &input, "--x-base", "0", "--x-alt", "7", "--y", "1", "--replicates", "0", "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let r = json(&o);
    assert_eq!(r["queries"][0]["error"]["kind"], "positivity");
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[positivity]"));
}

#[test]
fn mediator_interval_needs_assumption() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 1000, 1);
    let base = [
        "estimate", "--input", &input, "--x-base", "0", "--x-alt", "1", "--y", "1", "--evidence-x", "1",
        "--m-interval", "0.5,", "--replicates", "0", "--format", "json",
    ];
    assert_eq!(pocmed(&base).status.code(), Some(2));
    let mut with = base.to_vec();
    with.push("--assume-a1");
    let o = pocmed(&with);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert!(!r["queries"][0]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn verify_small_run() {
    let o = pocmed(&[
        "verify", "--runs", "0", "--random-scms", "2", "--sizes", "200", "--replicates", "20", "--format", "json",
    ]);
    let r = json(&o);
    assert_eq!(r["command"], "verify");
    let rows = r["rows"].as_array().unwrap();
    assert!(rows.iter().any(|row| row["check"].as_str().unwrap().contains("vs oracle")));
    let failed = rows.iter().any(|row| row["status"] == "fail");
    assert_eq!(r["passed"], !failed);
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
}

#[test]
fn sweep_point_matches_estimate() {
    let dir = TempDir::new().unwrap();
    let input = simulate(dir.path(), 1500, 8);
    let svg = dir.path().join("curve.svg");
    let o = pocmed(&[
        "sweep", "--input", &input, "--x-base", "0", "--x-alt", "1", "--y", "1", "--over", "y", "--values",
        "0,1,5", "--replicates", "0", "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("grid,quantity,value"));
    let t_at_1: f64 = csv
        .lines()
        .find(|l| l.starts_with("1,t_pns,"))
        .and_then(|l| l.split(',').nth(2))
        .unwrap()
        .parse()
        .unwrap();
    let est = json(&pocmed(&[
        "estimate", "--input", &input, "--x-base", "0", "--x-alt", "1", "--y", "1", "--replicates", "0", "--format",
        "json",
    ]));
    assert_eq!(t_at_1, value(&est, "pns", "t_pns"));
    let picture = fs::read_to_string(&svg).unwrap();
    assert!(picture.starts_with("<svg") && picture.contains("stroke-dasharray"));
}

#[test]
fn sweep_over_scm_parameter() {
    let o = pocmed(&[
        "sweep", "--x-base", "0", "--x-alt", "1", "--y", "1", "--over", "parameter", "--node", "outcome",
        "--term", "x", "--values", "0,0.5,1", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    let t0 = rows.iter().find(|r| r["grid"] == 0.0 && r["quantity"] == "t_pns").unwrap();
    let t1 = rows.iter().find(|r| r["grid"] == 1.0 && r["quantity"] == "t_pns").unwrap();
    assert!(t1["value"].as_f64().unwrap() > t0["value"].as_f64().unwrap());
    assert!(t1["truth"].is_number());

    let typo = pocmed(&["sweep", "--over", "parameter", "--node", "y", "--term", "x", "--values", "0,1"]);
    assert_eq!(typo.status.code(), Some(2));
}

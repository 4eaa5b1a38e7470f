use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn hbrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbrd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_str(&stdout(o)).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn eval_reports_example1_rates() {
    let cfg = fixture("example1.json");
    let o = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&fixture("channel_u0_x3.json"))]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "rate") - 2.0).abs() < 1e-12);
    let o = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&fixture("channel_u0_empty.json")), "--json"]);
    let v = json(&o);
    assert!((v["rate"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(v["feasible"], Value::Bool(true));
}

#[test]
fn eval_rejects_unnormalized_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(fixture("comp-delivery.json")).unwrap()).unwrap();
    cfg["pmf"][0] = Value::from(0.15);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, cfg.to_string()).unwrap();
    let ch = dir.path().join("ch.json");
    let o = hbrd(&["optimize", "--config", path(&fixture("comp-delivery.json")), "--oracle", "--save-channel", path(&ch)]);
    assert!(o.status.success());
    let o = hbrd(&["eval", "--config", path(&bad), "--channel", path(&ch)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normalize"), "{}", stderr(&o));
}

#[test]
fn eval_reports_parse_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"kind\": \"lossless\",\n  \"pmf\": [0.5,\n}").unwrap();
    let o = hbrd(&["eval", "--config", path(&bad), "--channel", path(&fixture("channel_u0_x3.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn eval_rejects_mismatched_channel() {
    let o = hbrd(&[
        "eval",
        "--config",
        path(&fixture("comp-delivery.json")),
        "--channel",
        path(&fixture("channel_u0_x3.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_round_trips_through_eval() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("best.json");
    let cfg = fixture("example1.json");
    let o = hbrd(&["optimize", "--config", path(&cfg), "--oracle", "--json", "--save-channel", path(&ch)]);
    let rows = json(&o);
    let rate = rows[0]["breakdown"]["rate"].as_f64().unwrap();
    assert!((rate - 2.0).abs() < 1e-12);
    let o = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&ch), "--json"]);
    assert!((json(&o)["rate"].as_f64().unwrap() - rate).abs() < 1e-12);
    // The embedded channel object is itself a valid channel file.
    let embedded = dir.path().join("embedded.json");
    std::fs::write(&embedded, rows[0]["channel"].to_string()).unwrap();
    let o = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&embedded), "--json"]);
    assert!((json(&o)["rate"].as_f64().unwrap() - rate).abs() < 1e-12);
}

#[test]
fn optimize_csv_has_fixed_header() {
    let o = hbrd(&["optimize", "--config", path(&fixture("comp-delivery.json")), "--oracle"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("D1,D2,rate,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), header.split(',').count());
    assert!((row[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn optimize_budget_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(fixture("example1.json")).unwrap()).unwrap();
    cfg["search"]["grid_step"] = Value::from("1/8");
    let big = dir.path().join("big.json");
    std::fs::write(&big, cfg.to_string()).unwrap();
    let o = hbrd(&["optimize", "--config", path(&big), "--oracle"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}

#[test]
fn optimize_sweep_is_monotone() {
    let o = hbrd(&[
        "optimize",
        "--config",
        path(&fixture("y2-absent.json")),
        "--sweep",
        "d1=0,0.05,0.1",
        "--json",
    ]);
    let rows = json(&o);
    let rates: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["breakdown"]["rate"].as_f64().unwrap()).collect();
    assert_eq!(rates.len(), 3);
    assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{rates:?}");
    let o = hbrd(&["optimize", "--config", path(&fixture("y2-absent.json")), "--sweep", "d1=0.2,0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hbrd(&["optimize", "--config", path(&fixture("y2-absent.json")), "--sweep", "x=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn closed_form_cases() {
    let o = hbrd(&["closed-form", "--config", path(&fixture("comp-delivery.json")), "--case", "CompDelivery"]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "value") - 1.0).abs() < 1e-12);
    assert!(stdout(&o).contains("\"output_axes\""));

    let o = hbrd(&["closed-form", "--config", path(&fixture("example1.json")), "--case", "Degraded"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("hypothesis"), "{}", stderr(&o));

    let o = hbrd(&["closed-form", "--config", path(&fixture("y1-absent.json")), "--case", "Y1Absent", "--json"]);
    let v = json(&o);
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((v["value"].as_f64().unwrap() - (1.0 + h(0.25))).abs() < 1e-12);

    let o = hbrd(&["closed-form", "--config", path(&fixture("y1-absent.json")), "--case", "Bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_on_bundled_fixtures() {
    let o = hbrd(&["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("checks passed"));
    let o = hbrd(&["verify", "--json"]);
    let v = json(&o);
    let checks = v.as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == Value::Bool(true)));
}

#[test]
fn verify_names_checks_broken_by_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(fixture("comp-delivery.json")).unwrap()).unwrap();
    // Move 0.01 of mass between two cells so the pmf stays normalized.
    cfg["pmf"][0] = Value::from(0.24);
    cfg["pmf"][1] = Value::from(0.01);
    std::fs::write(dir.path().join("comp-delivery.json"), cfg.to_string()).unwrap();
    let o = hbrd(&["verify", "--fixtures", dir.path().to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| n.contains("comp-delivery")), "{failed:?}");
}

#[test]
fn simulate_is_deterministic() {
    let cfg = fixture("example1.json");
    let args = ["simulate", "--config", path(&cfg), "--n", "4,8", "--trials", "300"];
    let (a, b) = (hbrd(&args), hbrd(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("n,R_total,"));
}

#[test]
fn simulate_pe_decreases_with_blocklength() {
    let o = hbrd(&["simulate", "--config", path(&fixture("example1.json")), "--trials", "2000", "--json"]);
    let rows = json(&o);
    let pe: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["stats"]["empirical_pe"].as_f64().unwrap()).collect();
    assert_eq!(pe.len(), 3);
    assert!(pe[0] > pe[1] && pe[1] > pe[2], "{pe:?}");
}

#[test]
fn simulate_zero_rates_fail() {
    let o = hbrd(&[
        "simulate",
        "--config",
        path(&fixture("example1.json")),
        "--n",
        "6",
        "--trials",
        "200",
        "--rates",
        "0,0,0,0,0",
        "--json",
    ]);
    let rows = json(&o);
    assert!(rows[0]["stats"]["empirical_pe"].as_f64().unwrap() > 0.95);
}

#[test]
fn simulate_budget_and_input_errors() {
    let cfg = fixture("example1.json");
    let o = hbrd(&["simulate", "--config", path(&cfg), "--n", "24", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hbrd(&["simulate", "--config", path(&cfg), "--rates", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hbrd(&["simulate", "--config", path(&fixture("comp-delivery.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let cfg = fixture("example1.json");
    let ch = fixture("channel_u0_x3.json");
    let a = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&ch)]);
    let b = hbrd(&["eval", "--config", path(&cfg), "--channel", path(&ch), "--out", path(&out)]);
    assert!(b.status.success());
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

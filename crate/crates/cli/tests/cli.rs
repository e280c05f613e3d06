use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const REFERENCE: &str = include_str!("../../../configs/reference.toml");

fn jrp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jrp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_value(path: &Path, quantity: &str) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{quantity},"))).unwrap();
    line.split(',').nth(2).unwrap().parse().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let k = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[k].parse().unwrap()).collect()
}

#[test]
fn evaluate_reference_is_feasible_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ref.toml", REFERENCE);
    let cfg = cfg.to_str().unwrap();
    let a = jrp(tmp.path(), &["evaluate", "--config", cfg, "--out-dir", "a"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert!(stdout(&a).contains("TESSAC"));
    let b = jrp(tmp.path(), &["evaluate", "--config", cfg, "--out-dir", "b"]);
    assert_eq!(b.status.code(), Some(0));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("evaluation.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let total = csv_value(&tmp.path().join("a/evaluation.csv"), "tessac_total");
    assert!((total - 718.2).abs() / 718.2 < 0.05, "{total}");
}

#[test]
fn reorder_point_above_batch_exits_infeasible() {
    let tmp = TempDir::new().unwrap();
    let text = REFERENCE.replacen("reorder_point_sats = 3\nbatch_size_sats = 5", "reorder_point_sats = 6\nbatch_size_sats = 5", 1);
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let o = jrp(tmp.path(), &["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("cond_1=0"));
    let flags = csv_value(&tmp.path().join("out/evaluation.csv"), "cond_1");
    assert_eq!(flags, 0.0);
}

#[test]
fn malformed_config_is_an_input_error_with_a_line() {
    let tmp = TempDir::new().unwrap();
    let text = REFERENCE.replacen("capacity_slots = 250", "capacity_slots = \"many\"", 1);
    let cfg = write_config(tmp.path(), "broken.toml", &text);
    let o = jrp(tmp.path(), &["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
    let o = jrp(tmp.path(), &["evaluate", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let o = jrp(tmp.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_below_population_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ref.toml", REFERENCE);
    let o = jrp(tmp.path(), &["optimize", "--config", cfg.to_str().unwrap(), "--budget", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("population"), "{}", stderr(&o));
    let o = jrp(tmp.path(), &["optimize", "--config", cfg.to_str().unwrap(), "--mode", "anarchic"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn centralized_solution_round_trips_through_evaluate() {
    let tmp = TempDir::new().unwrap();
    let text = REFERENCE.replacen("[optimizer.ga]\npopulation = 100", "[optimizer.ga]\npopulation = 30", 1);
    let cfg = write_config(tmp.path(), "ref.toml", &text);
    let cfg = cfg.to_str().unwrap();
    let o = jrp(tmp.path(), &["optimize", "--config", cfg, "--budget", "600", "--seed", "5", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let logged = column(&tmp.path().join("out/solution.csv"), "tessac_total")[0];
    let e = jrp(tmp.path(), &["evaluate", "--config", cfg, "--solution", "out/solution.csv", "--out-dir", "eval"]);
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let again = csv_value(&tmp.path().join("eval/evaluation.csv"), "tessac_total");
    assert!((again - logged).abs() <= 1e-9 * logged.abs().max(1.0), "{again} vs {logged}");
    assert!(tmp.path().join("out/generations.csv").exists());

    let o2 = jrp(tmp.path(), &["optimize", "--config", cfg, "--budget", "600", "--seed", "5", "--out-dir", "rerun"]);
    assert_eq!(o2.status.code(), Some(0));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("solution.csv")).unwrap();
    assert_eq!(read("out"), read("rerun"));
}

#[test]
fn decentralized_front_and_saved_front_selection() {
    let tmp = TempDir::new().unwrap();
    let text = REFERENCE
        .replacen("reference_costs_musd_per_year = [178.6, 297.8, 268.9]", "reference_costs_musd_per_year = [2000.0, 2000.0, 2000.0]", 1)
        .replacen("[optimizer.nsga]\npopulation = 100", "[optimizer.nsga]\npopulation = 20", 1);
    let cfg = write_config(tmp.path(), "dec.toml", &text);
    let cfg = cfg.to_str().unwrap();
    let o = jrp(tmp.path(), &["optimize", "--config", cfg, "--mode", "decentralized", "--budget", "400"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let front = tmp.path().join("out/front.csv");
    assert!(!column(&front, "tessac_1").is_empty());

    let s = jrp(
        tmp.path(),
        &["optimize", "--config", cfg, "--front", "out/front.csv", "--weights", "0.2,0.4,0.4", "--weights", "0.6,0.2,0.2", "--out-dir", "sel"],
    );
    assert_eq!(s.status.code(), Some(0), "{}", stderr(&s));
    let t1 = column(&tmp.path().join("sel/agreements.csv"), "tessac_1");
    assert_eq!(t1.len(), 2);
    assert!(t1[1] <= t1[0]);

    // each agreement evaluates back to its logged costs
    let e = jrp(tmp.path(), &["evaluate", "--config", cfg, "--solution", "sel/agreements.csv", "--row", "1", "--out-dir", "ev"]);
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let logged = column(&tmp.path().join("sel/agreements.csv"), "tessac_1")[1];
    let again = csv_value(&tmp.path().join("ev/evaluation.csv"), "tessac");
    assert!((again - logged).abs() <= 1e-9 * logged, "{again} vs {logged}");
}

#[test]
fn simulate_is_seed_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ref.toml", REFERENCE);
    let cfg = cfg.to_str().unwrap();
    let args = |d: &'static str| ["simulate", "--config", cfg, "--replications", "3", "--horizon", "3", "--seed", "11", "--out-dir", d];
    assert_eq!(jrp(tmp.path(), &args("a")).status.code(), Some(0));
    assert_eq!(jrp(tmp.path(), &args("b")).status.code(), Some(0));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("simulation.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn validate_with_one_replication_flags_standard_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "val.toml", include_str!("../../../configs/validation.toml"));
    let cfg = cfg.to_str().unwrap();
    let args = |d: &'static str| {
        ["validate", "--config", cfg, "--m", "2", "--instances", "2", "--replications", "1", "--horizon", "3", "--seed", "4", "--out-dir", d]
    };
    let o = jrp(tmp.path(), &args("a"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("unreliable"));
    let env = std::fs::read_to_string(tmp.path().join("a/envelope.csv")).unwrap();
    assert!(env.starts_with("metric,units,m=2,limit\n"));
    assert_eq!(env.lines().count(), 8);
    jrp(tmp.path(), &args("b"));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("instance_errors.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

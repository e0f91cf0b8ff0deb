use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn sirsilv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirsilv")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn table1() -> Value {
    serde_json::from_str(include_str!("../configs/table1.json")).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn column(dir: &Path, file: &str, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(dir.join(file)).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn run_ok(args: &[&str]) {
    let out = sirsilv(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    assert_eq!(sirsilv(&["simulate", "--override", "horizon=-1", "--out", out]).status.code(), Some(2));
    assert_eq!(sirsilv(&["analyze", "--k0", "-1", "--out", out]).status.code(), Some(2));
    assert_eq!(sirsilv(&["simulate", "--override", "bogus=1", "--out", out]).status.code(), Some(2));
    assert_eq!(sirsilv(&["simulate", "--config", "/nonexistent/cfg.json", "--out", out]).status.code(), Some(2));

    let err = sirsilv(&["simulate", "--override", "dimensional_params.mu_v=-1", "--out", out]);
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("mu_v"));

    let mut dimless = table1();
    let obj = dimless.as_object_mut().unwrap();
    obj.remove("dimensional_params");
    obj.insert("model_form".into(), json!("dimensionless"));
    obj.insert("dimensionless_params".into(), json!({"B_h": 1.0, "B_v": 1.0, "mu_h": 0.1, "gamma": 0.2, "mu_D": 1.0}));
    obj.insert("initial_state".into(), json!({"S_h": 0.9, "I_h": 0.1, "S_v": 1.0, "I_v": 0.0, "D": 1.0}));
    obj.insert("cost".into(), json!({"c": 1.0, "q": 1.0, "r": 1.0, "a": 1.0, "u_max": 1.0}));
    let b = write_config(tmp.path(), "b.json", &dimless);
    let a = write_config(tmp.path(), "a.json", &table1());
    let mismatch = sirsilv(&["compare", "--config", path(&a), "--config", path(&b), "--out", out]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn simulation_at_predator_prey_equilibrium_is_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model_form": "dimensionless",
        "dimensionless_params": {"B_h": 0.5, "B_v": 0.7, "mu_h": 0.1, "gamma": 0.3, "mu_D": 2.0},
        "initial_state": {"S_h": 1.0, "I_h": 0.0, "S_v": 1.0, "I_v": 0.0, "D": 1.0},
        "horizon": 5.0
    });
    let file = write_config(tmp.path(), "e2.json", &cfg);
    let out = tmp.path().join("out");
    run_ok(&["simulate", "--config", path(&file), "--out", path(&out)]);
    for (name, value) in [("S_h", 1.0), ("I_h", 0.0), ("S_v", 1.0), ("I_v", 0.0), ("D", 1.0), ("u", 0.0)] {
        assert!(column(&out, "timeseries.csv", name).iter().all(|&v| v == value), "{name}");
    }
    let text = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("")));
}

#[test]
fn uncontrolled_reference_run_has_an_epidemic_peak() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--out", path(tmp.path())]);
    let i_h = column(tmp.path(), "timeseries.csv", "I_h");
    assert!(i_h.iter().cloned().fold(0.0, f64::max) > i_h[0]);
    let total: Vec<f64> = ["S_h", "I_h", "R_h"].iter().map(|n| column(tmp.path(), "timeseries.csv", n)).fold(
        vec![0.0; i_h.len()],
        |acc, c| acc.iter().zip(c).map(|(a, b)| a + b).collect(),
    );
    assert!(total.iter().all(|t| (t - 10.0).abs() < 1e-6));
    assert!(column(tmp.path(), "timeseries.csv", "u").iter().all(|&u| u == 0.0));
    let s = summary(tmp.path());
    assert!(s["units"].as_str().unwrap().starts_with("dimensional"));
    assert_eq!(s["config"]["horizon"], json!(120.0));
}

#[test]
fn analysis_reports_level_set_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["analyze", "--k0", "-2", "--k0", "-3", "--out", path(tmp.path())]);
    let s = summary(tmp.path());
    assert!((s["r0"].as_f64().unwrap() - 3.2238).abs() < 1e-3);
    let sets = s["level_sets"].as_array().unwrap();
    assert_eq!(sets.len(), 2);
    let at = |k: f64| sets.iter().find(|l| l["k0"].as_f64() == Some(k)).unwrap();
    assert_eq!(at(-2.0)["a"], json!(1.0));
    assert_eq!(at(-2.0)["b"], json!(1.0));
    assert_eq!(at(-3.0)["metzler_stable"], json!(false));
    assert!((at(-3.0)["eco_r0"].as_f64().unwrap() - 206.2).abs() < 0.05);
}

#[test]
fn long_horizon_release_keeps_infections_below_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["optimize", "--out", path(tmp.path())]);
    let controlled = column(tmp.path(), "timeseries.csv", "I_h");
    let baseline = column(tmp.path(), "baseline.csv", "I_h");
    let t = column(tmp.path(), "timeseries.csv", "t");
    let skip = t.iter().position(|&x| x > 0.05 * 120.0).unwrap();
    assert!(controlled[skip..].iter().zip(&baseline[skip..]).all(|(c, b)| c < b));
    let s = summary(tmp.path());
    assert_eq!(s["optimization"]["converged"], json!(true));
    assert!(s["optimization"]["objective_optimal"].as_f64() <= s["optimization"]["objective_uncontrolled"].as_f64());
    let adjoint = std::fs::read_to_string(tmp.path().join("adjoint.csv")).unwrap();
    assert!(adjoint.starts_with("t,p1,p2,p3,p4,p5\n"));
    let p1 = column(tmp.path(), "adjoint.csv", "p1");
    assert!((p1.last().unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn short_horizon_release_lowers_the_peak() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["optimize", "--override", "horizon=30", "--out", path(tmp.path())]);
    let peak = |file| column(tmp.path(), file, "I_h").into_iter().fold(0.0, f64::max);
    assert!(peak("timeseries.csv") < peak("baseline.csv"));
}

#[test]
fn linear_cost_release_is_bang_bang() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["optimize", "--override", "cost.c=0", "--out", path(tmp.path())]);
    let u = column(tmp.path(), "timeseries.csv", "u");
    let extreme = u.iter().filter(|&&v| v.abs() <= 1e-6 || (v - 0.5).abs() <= 1e-6).count();
    assert!(extreme as f64 >= 0.99 * u.len() as f64, "{extreme} of {}", u.len());
}

fn compare(tmp: &Path, a: &Value, b: &Value) -> Value {
    let (fa, fb) = (write_config(tmp, "a.json", a), write_config(tmp, "b.json", b));
    let out = tmp.join("cmp");
    run_ok(&["compare", "--config", path(&fa), "--config", path(&fb), "--out", path(&out)]);
    serde_json::from_str(&std::fs::read_to_string(out.join("compare.json")).unwrap()).unwrap()
}

#[test]
fn comparing_horizons_labels_both_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut short = table1();
    short["horizon"] = json!(30.0);
    let c = compare(tmp.path(), &short, &table1());
    assert_eq!(c["runs"][0]["horizon"], json!(30.0));
    assert_eq!(c["runs"][1]["horizon"], json!(120.0));
    for key in ["objective_optimal", "peak_infected", "cumulative_infected", "control_effort"] {
        let d = c["differences"][key].as_f64().unwrap();
        let expect = c["runs"][1][key].as_f64().unwrap() - c["runs"][0][key].as_f64().unwrap();
        assert_eq!(d, expect, "{key}");
    }
}

#[test]
fn comparing_identical_configs_gives_zero_differences() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = table1();
    cfg["horizon"] = json!(30.0);
    let c = compare(tmp.path(), &cfg, &cfg);
    for (_, d) in c["differences"].as_object().unwrap() {
        assert_eq!(d.as_f64(), Some(0.0));
    }
}

#[test]
fn comparing_cost_forms_reports_both_efforts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut linear = table1();
    linear["cost"]["c"] = json!(0.0);
    let c = compare(tmp.path(), &table1(), &linear);
    let (e0, e1) = (c["runs"][0]["control_effort"].as_f64().unwrap(), c["runs"][1]["control_effort"].as_f64().unwrap());
    assert!(e0 > 0.0 && e1 > 0.0 && e0 != e1);
}

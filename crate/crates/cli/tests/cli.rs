use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qimex"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("qimex-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("qimex-cli-test-{}-{name}.json", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> i32 {
    let mut c = bin();
    c.args(args).arg(config).arg("--out").arg(out);
    c.output().unwrap().status.code().unwrap()
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn metric(rep: &serde_json::Value, name: &str) -> f64 {
    rep["result"]["metrics"][name]["value"].as_f64().unwrap()
}

#[test]
fn empty_physics_returns_initial_data() {
    let out = out_dir("empty");
    assert_eq!(run(&["run"], &configs().join("empty_physics.json"), &out), 0);
    let (header, rows) = read_csv(&out.join("solution.csv"));
    assert_eq!(header, ["n", "t", "x", "u_classical", "u_quantum"]);
    assert_eq!(rows.len(), 5 * 4);
    for r in &rows {
        let x: f64 = r[2].parse().unwrap();
        let uc: f64 = r[3].parse().unwrap();
        let uq: f64 = r[4].parse().unwrap();
        assert!((uc - (std::f64::consts::PI * x).sin()).abs() < 1e-12);
        assert!((uq - uc).abs() < 1e-2);
    }
    let rep = report(&out);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["config"]["kind"], "heat1d");
    assert!(rep["version"]["qimex"].is_string());
}

#[test]
fn unknown_key_is_a_validation_error() {
    let cfg = write_config("typo", r#"{"kind":"heat1d","nx":4,"horizn":0.1}"#);
    assert_eq!(run(&["run"], &cfg, &out_dir("typo")), 1);
}

#[test]
fn out_of_range_parameters_are_rejected() {
    // lambda_tilde = 2 is outside (0,1)
    let cfg = write_config(
        "lt",
        r#"{"kind":"telegraph","nx":8,"beta":2,"horizon":0.1,"dt_rule":2,"epsilon":0.01,
            "a":"0.5","u0":"sin(pi*x)","v0":"0"}"#,
    );
    assert_eq!(run(&["run"], &cfg, &out_dir("lt")), 1);
    let cfg = write_config("nt", r#"{"kind":"heat1d","nx":4,"horizon":0.1,"nt":4,"dt":0.1,"epsilon":1,"a":"1","u0":"1"}"#);
    assert_eq!(run(&["run"], &cfg, &out_dir("nt")), 1);
}

#[test]
fn sweep_needs_two_epsilons() {
    let cfg = write_config(
        "one-eps",
        r#"{"kind":"heat1d","nx":4,"horizon":0.1,"nt":4,"epsilons":[1.0],"a":"1","u0":"1"}"#,
    );
    assert_eq!(run(&["sweep"], &cfg, &out_dir("one-eps")), 1);
}

#[test]
fn numerical_failure_writes_diagnostic() {
    let cfg = write_config("zero", r#"{"kind":"heat1d","nx":4,"horizon":0.1,"nt":4,"epsilon":1,"a":"1","u0":"0"}"#);
    let out = out_dir("zero");
    assert_eq!(run(&["run"], &cfg, &out), 2);
    let diag: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("diagnostic.json")).unwrap()).unwrap();
    assert_eq!(diag["status"], "numerical-failure");
}

#[test]
fn bench_is_reproducible_given_seed() {
    let cfg = configs().join("evoltime_bench.json");
    let (a, b, c) = (out_dir("bench-a"), out_dir("bench-b"), out_dir("bench-c"));
    assert_eq!(run(&["run"], &cfg, &a), 0);
    assert_eq!(run(&["--seed", "7", "run"], &cfg, &b), 0);
    assert_eq!(run(&["--seed", "8", "--threads", "1", "run"], &cfg, &c), 0);
    let fa = std::fs::read(a.join("bounds.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("bounds.csv")).unwrap());
    assert_ne!(fa, std::fs::read(c.join("bounds.csv")).unwrap());
    let rep = report(&a);
    assert!(metric(&rep, "worst_bound_violation") <= 1e-8);
    assert_eq!(rep["result"]["metrics"]["chain_violations"], 0);
    let cross = rep["result"]["metrics"]["remark_crossover"].as_array().unwrap();
    let a8t5 = cross.iter().find(|c| c["a"] == 8.0 && c["t"] == 5.0).unwrap();
    assert_eq!(a8t5["jordan_below_lognorm"], true);
}

#[test]
fn heat_runs_are_byte_identical() {
    let cfg = configs().join("empty_physics.json");
    let (a, b) = (out_dir("det-a"), out_dir("det-b"));
    assert_eq!(run(&["run"], &cfg, &a), 0);
    assert_eq!(run(&["run"], &cfg, &b), 0);
    assert_eq!(std::fs::read(a.join("solution.csv")).unwrap(), std::fs::read(b.join("solution.csv")).unwrap());
}

#[test]
fn heat_sweep_depends_only_on_ratio() {
    let out = out_dir("ratio");
    assert_eq!(run(&["sweep"], &configs().join("heat_ratio_sweep.json"), &out), 0);
    let (_, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    let e: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((e[0] - e[1]).abs() <= 1e-9 * e[0].max(1e-12));
    assert!(e[0] < 1e-2);
    let (_, s0) = read_csv(&out.join("eps_0/solution.csv"));
    let (_, s1) = read_csv(&out.join("eps_1/solution.csv"));
    for (r0, r1) in s0.iter().zip(&s1) {
        for k in 3..5 {
            let (x, y): (f64, f64) = (r0[k].parse().unwrap(), r1[k].parse().unwrap());
            assert!((x - y).abs() < 1e-10);
        }
    }
    assert_eq!(report(&out)["result"]["aggregate"]["nt_spread"], 0.0);
}

#[test]
fn complexity_report_for_heat() {
    let out = out_dir("cx");
    assert_eq!(run(&["run"], &configs().join("complexity_heat.json"), &out), 0);
    let (header, rows) = read_csv(&out.join("bounds.csv"));
    assert_eq!(header, ["quantity", "value", "op"]);
    assert!(rows.iter().any(|r| r[0] == "queries"));
    let rep = report(&out);
    assert_eq!(rep["result"]["complexity"]["label"], "order-estimate, constant=1");
}

#[test]
fn fig1_config_meets_tolerance() {
    let out = out_dir("fig1");
    assert_eq!(run(&["run"], &configs().join("fig1.json"), &out), 0);
    let rep = report(&out);
    assert!(metric(&rep, "rel_l2_error") <= 1e-2);
    let (header, rows) = read_csv(&out.join("solution.csv"));
    assert_eq!(header, ["n", "t", "x", "u_classical", "u_quantum"]);
    assert_eq!(rows.len(), 53 * 15);
}

#[test]
fn fig3_config_emits_both_fields() {
    let out = out_dir("fig3");
    assert_eq!(run(&["run"], &configs().join("fig3_eps1e-6.json"), &out), 0);
    let (header, rows) = read_csv(&out.join("solution.csv"));
    assert_eq!(header, ["n", "t", "x", "u_classical", "u_quantum", "v_classical", "v_quantum"]);
    assert_eq!(rows.len(), 16 * 16);
    let rep = report(&out);
    assert_eq!(rep["result"]["problem"]["nt"], 15);
    assert_eq!(rep["result"]["problem"]["k"], 4.0);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use nlpq_cli::run::{Report, Status};
use nlpq_cli::sweep::SweepReport;
use serde_json::{json, Value};
use tempfile::TempDir;

fn nlpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlpq")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run_task(task: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![task, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nlpq(&args)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn quadratic_1d(h: f64) -> Value {
    json!({
        "growth": {"family": "power", "params": {"p": 2.0}},
        "grid": {"dim": 1, "h": h, "omega_radius": 1.0, "R_infinity": 4.0},
        "s": 0.5,
        "exterior": "max(0, min(1, x))",
        "solver": {"tol": 1e-11}
    })
}

fn holder_config() -> Value {
    json!({
        "task": "holder",
        "growth": {"family": "power", "params": {"p": 2.0}},
        "grid": {"dim": 1, "h": 0.015625, "omega_radius": 2.0, "R_infinity": 8.0},
        "s": 0.8,
        "exterior": "max(0, min(1, x))",
        "R": 0.25,
        "samples": 8,
        "seed": 11
    })
}

/// Nodes as `(x, u)` from a 1D `solution.csv`.
fn solution_rows(text: &str) -> Vec<(f64, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x,y,u"));
    lines
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (c[1], c[3])
        })
        .collect()
}

#[test]
fn growth_check_on_the_square() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "g.json", &json!({"growth": {"family": "power", "params": {"p": 2.0}}}));
    let out = tmp.path().join("out");
    let o = run_task("growth-check", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Report = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    let g = rep.growth_check.unwrap();
    assert!((g.p_est - 2.0).abs() < 1e-9 && (g.q_est - 2.0).abs() < 1e-9);
    assert!(g.all_passed());
}

#[test]
fn minimize_matches_dense_solve() {
    let tmp = TempDir::new().unwrap();
    let s = 0.5;
    let cfg = write_config(tmp.path(), "m.json", &quadratic_1d(0.0625));
    let out = tmp.path().join("out");
    let o = run_task("minimize", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let nodes = solution_rows(&read(&out.join("solution.csv")));
    let h = 0.0625;
    let interior: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].0.abs() < 1.0 - 1e-12).collect();
    let n = interior.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (ai, &i) in interior.iter().enumerate() {
        for (j, &(xj, uj)) in nodes.iter().enumerate() {
            if j == i {
                continue;
            }
            let r = (nodes[i].0 - xj).abs();
            let c = 4.0 * (1.0 - s) * h * h / r / r.powf(2.0 * s);
            a[(ai, ai)] += c;
            match interior.iter().position(|&m| m == j) {
                Some(aj) => a[(ai, aj)] -= c,
                None => b[ai] += c * uj,
            }
        }
    }
    let oracle = a.lu().solve(&b).unwrap();
    for (ai, &i) in interior.iter().enumerate() {
        assert!((nodes[i].1 - oracle[ai]).abs() < 1e-8, "x = {}: {} vs {}", nodes[i].0, nodes[i].1, oracle[ai]);
    }
    let rep: Report = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    let run = &rep.runs[0];
    assert!(run.solve.as_ref().unwrap().final_energy <= run.solve.as_ref().unwrap().initial_energy);
    assert!(run.residual.unwrap() < 1e-8);
}

#[test]
fn missing_s_exits_with_status_2() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = quadratic_1d(0.125);
    cfg.as_object_mut().unwrap().remove("s");
    let cfg = write_config(tmp.path(), "bad.json", &cfg);
    let o = run_task("minimize", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`s`"));
}

#[test]
fn schema_violations_exit_with_status_2() {
    let tmp = TempDir::new().unwrap();
    let mut unknown = quadratic_1d(0.125);
    unknown["colour"] = json!("red");
    let mut out_of_range = quadratic_1d(0.125);
    out_of_range["s"] = json!([0.5, 1.0]);
    let mut bad_expr = quadratic_1d(0.125);
    bad_expr["exterior"] = json!("sin(x)");
    for (i, cfg) in [unknown, out_of_range, bad_expr].iter().enumerate() {
        let path = write_config(tmp.path(), &format!("c{i}.json"), cfg);
        let o = run_task("minimize", &path, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "config {i}");
    }
}

#[test]
fn numeric_failure_exits_with_status_3_and_a_partial_report() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = quadratic_1d(0.0625);
    cfg["s"] = json!([0.5, 0.9]);
    cfg["solver"] = json!({"tol": 1e-14, "max_iterations": 2});
    let path = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("out");
    let o = run_task("minimize", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let rep: Report = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    assert_eq!(rep.status, Status::Error);
    assert!(rep.error.unwrap().contains("did not converge"));
    assert!(rep.runs.is_empty());
}

#[test]
fn reports_are_byte_identical_across_reruns_and_job_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({
        "task": "dg-check",
        "growth": {"family": "sum", "params": {"p": 2.0, "q": 3.0}},
        "kernel": "checker:2",
        "grid": {"dim": 1, "h": 0.0625, "omega_radius": 1.0, "R_infinity": 4.0},
        "s": [0.4, 0.7],
        "exterior": "max(0, min(1, x))",
        "samples": 12
    });
    let path = write_config(tmp.path(), "dg.json", &cfg);
    let mut seen: Option<Vec<String>> = None;
    for (i, jobs) in ["1", "2", "4", "1"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = run_task("dg-check", &path, &out, &["--jobs", jobs, "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<String> =
            ["report.json", "solution.csv", "samples.csv"].iter().map(|f| read(&out.join(f))).collect();
        match &seen {
            None => seen = Some(files),
            Some(first) => assert!(first == &files, "output differs with --jobs {jobs}"),
        }
    }
    let other = tmp.path().join("other-seed");
    assert!(run_task("dg-check", &path, &other, &["--seed", "6"]).status.success());
    assert_ne!(read(&other.join("samples.csv")), seen.unwrap()[2]);
}

#[test]
fn every_report_round_trips() {
    let tmp = TempDir::new().unwrap();
    let mut bound = quadratic_1d(0.0625);
    bound["s"] = json!(0.3);
    bound["R"] = json!(0.25);
    bound["deltas"] = json!([0.5, 0.25]);
    let mut ineq = quadratic_1d(0.0625);
    ineq["s"] = json!([0.3, 0.6]);
    ineq["R"] = json!(1.0);
    ineq["inequalities"] = json!({
        "function": "max(-1, min(1, x / 0.1))",
        "h_level": -0.5, "k_level": 0.5, "gamma": 0.2, "gamma0": 0.2, "C0": 1000.0
    });
    for (task, cfg) in [("minimize", quadratic_1d(0.125)), ("bound", bound), ("inequalities", ineq), ("holder", holder_config())] {
        let path = write_config(tmp.path(), &format!("{task}.json"), &cfg);
        let out = tmp.path().join(task);
        let o = run_task(task, &path, &out, &[]);
        assert!(o.status.success(), "{task}: {}", String::from_utf8_lossy(&o.stderr));
        let text = read(&out.join("report.json"));
        let rep: Report = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&rep).unwrap();
        again.push('\n');
        assert_eq!(text, again, "{task}");
        // the embedded config validates again
        let cfg_text = serde_json::to_string(&rep.config).unwrap();
        let path = write_config(tmp.path(), &format!("{task}-again.json"), &serde_json::from_str(&cfg_text).unwrap());
        assert!(run_task(task, &path, &tmp.path().join(format!("{task}-again")), &[]).status.success());
    }
}

#[test]
fn holder_task_writes_oscillation_decay() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "h.json", &holder_config());
    let out = tmp.path().join("out");
    assert!(run_task("holder", &path, &out, &[]).status.success());
    let osc = read(&out.join("osc_decay.csv"));
    let rows: Vec<Vec<f64>> =
        osc.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 4);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1] && w[1][2] <= w[0][2]));
    let rep: Report = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    assert_eq!(rep.runs[0].membership.as_ref().unwrap().samples, 8);
}

#[test]
fn s_sweep_gives_one_row_per_value() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "h.json", &holder_config());
    let out = tmp.path().join("sweep");
    let o = nlpq(&[
        "sweep", "--config", path.to_str().unwrap(), "--param", "s", "--values", "0.6,0.7,0.8,0.9", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("sweep.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "s,status,alpha_hat,c_fit,c_empirical,error");
    assert_eq!(lines.len(), 5);
    for (line, s) in lines[1..].iter().zip(["0.6", "0.7", "0.8", "0.9"]) {
        assert!(line.starts_with(&format!("{s},ok,")), "{line}");
    }
    let rep: SweepReport = serde_json::from_str(&read(&out.join("sweep.json"))).unwrap();
    assert_eq!(rep.failed(), 0);
}

#[test]
fn delta_sweep_records_failures_per_row() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = quadratic_1d(0.0625);
    cfg["task"] = json!("bound");
    cfg["s"] = json!(0.3);
    cfg["R"] = json!(0.25);
    cfg["deltas"] = json!([0.5]);
    let path = write_config(tmp.path(), "b.json", &cfg);
    let out = tmp.path().join("sweep");
    let o = nlpq(&[
        "sweep", "--config", path.to_str().unwrap(), "--param", "delta", "--values", "0.5,0.25,0.125,-1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("sweep.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,s,status,c_fit,p_star,error");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..4].iter().all(|l| l.contains(",ok,")));
    assert!(lines[4].starts_with("-1,,error,"), "{}", lines[4]);
}

#[test]
fn empty_sweep_exits_with_status_2() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "h.json", &holder_config());
    let o = nlpq(&["sweep", "--config", path.to_str().unwrap(), "--param", "s", "--values", "", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nlpq(&["sweep", "--config", path.to_str().unwrap(), "--param", "r", "--values", "0.5", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_norm-descent");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_two_by_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.txt", "2\n2 1\n1 3\n");
    let out = cli(&["analyze", &m]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["Linf_exact"], 7.0);
    assert_eq!(v["lsep_exact_2x2"], 7.0);
    assert!((v["rho_diag"].as_f64().unwrap() - 5.0 / 7.0).abs() < 1e-15);
}

#[test]
fn analyze_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "i.txt", "3\n1 0 0\n0 1 0\n0 0 1\n");
    let v: serde_json::Value = serde_json::from_str(&stdout(&cli(&["analyze", &m]))).unwrap();
    assert_eq!(v["L2"], 1.0);
    assert_eq!(v["Linf_exact"], 3.0);
    assert_eq!(v["rho_diag"], 1.0);
    assert!(v.get("lsep_exact_2x2").is_none());
}

#[test]
fn analyze_large_matrix_omits_exact_constant() {
    let dir = tempfile::tempdir().unwrap();
    let d = 25;
    let mut text = format!("{d}\n");
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .map(|j| if i == j { "2".into() } else { "0".into() })
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    let m = write(dir.path(), "big.txt", &text);
    let out = cli(&["analyze", &m]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v.get("Linf_exact").is_none());
}

#[test]
fn analyze_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("short.txt", "2\n1 0\n"),
        ("asym.txt", "2\n1 0.5\n0.4 1\n"),
        ("word.txt", "2\n1 x\n0 1\n"),
    ] {
        let m = write(dir.path(), name, text);
        let out = cli(&["analyze", &m]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
    }
    assert_eq!(
        cli(&["analyze", "/nonexistent/m.txt"]).status.code(),
        Some(2)
    );
}

#[test]
fn run_writes_trace_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"problem":{"quadratic":{"d":2,"lambda_max":1,"theta":0.5,"seed":3}},
            "optimizer":{"method":"gd","L":1},"T":4,"x0_seed":7}"#,
    );
    let a = cli(&["run", "--config", &cfg]);
    assert!(a.status.success());
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,f,dual_grad_norm,dist_sq");
    assert_eq!(lines.len(), 6);
    let f1: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(f1, 0.0);
    assert_eq!(a.stdout, cli(&["run", "--config", &cfg]).stdout);

    let out_path = dir.path().join("trace.csv");
    let b = cli(&["run", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(b.status.success() && b.stdout.is_empty());
    assert_eq!(fs::read(&out_path).unwrap(), a.stdout);
}

#[test]
fn run_rejects_invalid_configs() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "not json",
        r#"{"problem":{"quadratic":{"d":3,"lambda_max":0.5,"theta":0}},"optimizer":{"method":"gd"},"T":5}"#,
        r#"{"problem":{"quadratic":{"d":3,"lambda_max":2,"theta":0,"sigma":0.5}},"optimizer":{"method":"gd"},"T":5}"#,
        r#"{"problem":{"cosh":{"d":3}},"optimizer":{"method":"cd"},"T":5}"#,
    ] {
        let cfg = write(dir.path(), "bad.json", text);
        let out = cli(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn divergence_exits_3_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "div.json",
        r#"{"problem":{"quadratic":{"d":4,"lambda_max":100,"theta":0.3,"seed":1}},
            "optimizer":{"method":"gd","L":1},"T":1000,"x0_seed":1}"#,
    );
    let out = cli(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divergence"));
    let text = stdout(&out);
    let rows = text.lines().count() - 1;
    assert!(rows > 1 && rows < 1001);
}

#[test]
fn quadgrid_dump_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "grid.json",
        r#"{"d":4,"lambda_max_values":[1,10],"theta_values":[0,1],"repeats":5,"x0_seed":3}"#,
    );
    let dump = dir.path().join("x0");
    let out = cli(&[
        "quadgrid",
        "--config",
        &cfg,
        "--dump-x0",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    let first: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(first[5] <= 1e-20);
    for k in 0..4 {
        let gd = fs::read(dump.join(format!("cell{k:03}_gd.csv"))).unwrap();
        let sign = fs::read(dump.join(format!("cell{k:03}_signgd.csv"))).unwrap();
        assert_eq!(gd, sign);
        assert_eq!(String::from_utf8(gd).unwrap().lines().count(), 5);
    }

    let big = write(dir.path(), "big.json", r#"{"d":25}"#);
    assert_eq!(cli(&["quadgrid", "--config", &big]).status.code(), Some(2));
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "grid.json",
        r#"{"d":3,"lambda_max_values":[2],"theta_values":[0],"repeats":2}"#,
    );
    let out = Command::new(BIN)
        .args(["quadgrid", "--config", &cfg])
        .env("NORM_DESCENT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[model]
omega_a = 1500.0
g = 100.0
lambda = 1000.0
stochasticity = 1000.0
dim = 64
periods = 10

[sequence]
protocol = "udd"
n = 12

[noise]
xi = 0.0
axes = "yz"
seed = 11

[run]
reps = 8
grid_points = 20

[sweep]
n_list = [4, 12]
count = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddrobust"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    bin()
        .arg(args[0])
        .arg("--config")
        .arg(&cfg)
        .args(&args[1..])
        .env("DDROBUST_WORKERS", "2")
        .output()
        .unwrap()
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn trace_writes_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["trace", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse_csv(&out.join("trace.csv"));
    assert_eq!(h, ["t", "s", "q"]);
    // t = 0, 10 kicks, 12 pulses and t = T
    assert_eq!(rows.len(), 24);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - 1.0).abs() < 1e-14 && rows[0][2].abs() < 1e-14);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for key in ["T0 = ", "k = ", "env = ", "[model]", "seed = 11", "wall_clock_s"] {
        assert!(manifest.contains(key), "missing {key}");
    }
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    let cell = text.lines().nth(5).unwrap().split(',').nth(1).unwrap();
    assert_eq!(cell.split('e').next().unwrap().len(), 18);
}

#[test]
fn ensemble_trace_adds_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["trace", "--xi", "0.01", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let (h, rows) = parse_csv(&out.join("trace.csv"));
    assert_eq!(h, ["t", "s", "q", "s_mean", "s_stderr", "q_mean"]);
    assert_eq!(rows.len(), 21);
    assert!(rows[1..].iter().all(|r| r[4] >= 0.0));
}

#[test]
fn free_induction_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["trace", "--n", "0", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let (_, rows) = parse_csv(&out.join("trace.csv"));
    assert_eq!(rows.len(), 12);
}

#[test]
fn custom_fractions_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let f = dir.path().join("f.txt");
    fs::write(&f, "# three pulses\n0.2\n0.5\n0.9\n").unwrap();
    let o = run(
        &["trace", "--fractions", f.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = parse_csv(&out.join("trace.csv"));
    assert_eq!(rows.len(), 1 + 10 + 3 + 1);
}

#[test]
fn sweep_xi_writes_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["sweep-xi", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse_csv(&out.join("sweep.csv"));
    assert_eq!(h, ["xi", "xi2", "one_minus_s_mean", "stderr"]);
    assert_eq!(rows.len(), 4);
    let fit = fs::read_to_string(out.join("fit.txt")).unwrap();
    for key in ["slope = ", "intercept = ", "r_squared = ", "c2_estimate = "] {
        assert!(fit.contains(key));
    }
}

#[test]
fn large_regime_skips_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, SMALL.replace("count = 4", "count = 3\nregime = \"large\"")).unwrap();
    let out = dir.path().join("o");
    let o = run(&["sweep-xi", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(fs::read_to_string(out.join("fit.txt")).unwrap().starts_with("no fit"));
}

#[test]
fn degenerate_sweep_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, SMALL.replace("count = 4", "count = 4\nxi = [0.0]")).unwrap();
    let o = run(&["sweep-xi"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate sweep"));
}

#[test]
fn sweep_n_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["sweep-n", "--xi", "0.01", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let (h, rows) = parse_csv(&out.join("summary.csv"));
    assert_eq!(h, ["n", "one_minus_s_mean", "stderr"]);
    assert_eq!(rows.len(), 2);
    let (h, _) = parse_csv(&out.join("sweep_n_12.csv"));
    assert_eq!(h, ["t", "s_mean", "s_stderr", "q_mean"]);
}

#[test]
fn compare_reports_leaders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["compare", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(out.join("compare_udd_n12.csv").exists());
    assert!(out.join("compare_pdd_n4.csv").exists());
    let text = fs::read_to_string(out.join("crossover.txt")).unwrap();
    assert!(text.contains("n = 4"));
    assert!(text.contains("leads on"));
}

#[test]
fn compare_identical_protocols() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, SMALL.replace("count = 4", "count = 4\nprotocols = [\"pdd\", \"pdd\"]")).unwrap();
    let out = dir.path().join("o");
    let o = run(&["compare", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("crossover.txt")).unwrap();
    assert_eq!(text.matches("zero difference").count(), 2);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[model]\nbogus = 1\n").unwrap();
    assert_eq!(run(&["trace"], dir.path()).status.code(), Some(1));
    fs::write(&cfg, "[model]\ndim = 12\n").unwrap();
    assert_eq!(run(&["trace"], dir.path()).status.code(), Some(1));
    let o = bin().args(["trace", "--protocol", "zigzag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["trace", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&["trace", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_detects_fault() {
    let o = bin().args(["verify", "--level", "fast"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("eps1_identity"));
    assert!(!table.contains("FAIL"));
    let o = bin().args(["verify", "--fault", "flip-sign"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps1_identity"));
}

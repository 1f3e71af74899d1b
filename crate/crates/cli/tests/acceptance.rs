//! Acceptance criteria at reference parameters. Each test prints one
//! `criterion N: PASS|FAIL` line to stderr, bypassing output capture.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ddrobust::experiments::{
    compare_protocols, fit_xi_sweep, monte_carlo_signal, monte_carlo_trace, small_regime_grid,
    sweep_xi, uniform_grid, McResult, ProtocolTrace,
};
use ddrobust::observables::max_bound_excess;
use ddrobust::oracle::{check_q_bound, random_case, random_env, run_suite, split_vs_dense_fidelity, Fault, Level};
use ddrobust::par::Execution;
use ddrobust::{
    trace_run, EnvInit, ErrorAxes, ErrorModel, ModelParams, Protocol, PulseError, PulseSchedule,
    SignalPoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BOUND_TOL: f64 = 1e-10;
const REPS: usize = 200;
const GRID: usize = 200;

fn verdict(id: u32, ok: bool, detail: &str) {
    let line = format!(
        "criterion {id}: {}  {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn reference() -> ModelParams {
    ModelParams::reference()
}

fn reference_traces() -> &'static [ProtocolTrace] {
    static TRACES: OnceLock<Vec<ProtocolTrace>> = OnceLock::new();
    TRACES.get_or_init(|| {
        let p = reference();
        compare_protocols(
            &p,
            &[50, 200, 500],
            &[Protocol::Udd, Protocol::Pdd],
            &uniform_grid(&p, GRID),
            &EnvInit::default(),
            Execution::Parallel,
        )
        .unwrap()
    })
}

fn find(protocol: Protocol, n: usize) -> &'static [SignalPoint] {
    &reference_traces()
        .iter()
        .find(|t| t.protocol == protocol && t.n == n)
        .unwrap()
        .points
}

fn mc_excess(r: &McResult) -> f64 {
    r.s_values
        .iter()
        .zip(&r.q_values)
        .map(|(&s, &q)| {
            let m = s * s + q * q - 1.0;
            let b = q.abs() - (1.0 - s * s).max(0.0).sqrt();
            m.max(b)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn udd500_mc(xi: f64, seed: u64) -> McResult {
    let sched = PulseSchedule::generate(Protocol::Udd, 500).unwrap();
    let m = ErrorModel::new(xi, ErrorAxes::YAndZ, seed).unwrap();
    monte_carlo_signal(&reference(), &sched, &m, REPS, &EnvInit::default(), Execution::Parallel)
        .unwrap()
}

#[test]
fn criterion_1_oracle_identities() {
    let start = Instant::now();
    let res = run_suite(Level::Fast, Fault::None).unwrap();
    let elapsed = start.elapsed();
    let get = |name: &str| res.iter().find(|r| r.name == name).unwrap();
    let identity = ["eps0_identity_operator", "eps0_identity_signal", "eps1_identity"]
        .iter()
        .map(|n| get(n).value)
        .fold(0.0, f64::max);
    let exp = get("expansion_cubic_remainder");
    let ok = identity <= 1e-12 && exp.value <= 0.2 && elapsed < Duration::from_secs(60);
    verdict(
        1,
        ok,
        &format!(
            "max identity residual {identity:.2e} over 50 cases; {}; {:.1} s",
            exp.detail,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_split_vs_dense() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for dim in [8, 16] {
        for xi in [0.0, 0.05, 0.3] {
            for _ in 0..30 {
                let case = random_case(&mut rng, dim, 10, xi, ErrorAxes::YAndZ);
                worst = worst.max(1.0 - split_vs_dense_fidelity(&case).unwrap());
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-10 && elapsed < Duration::from_secs(120);
    verdict(
        2,
        ok,
        &format!(
            "{cases} cases at N=8,16; max 1-fidelity {worst:.2e}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_bounds() {
    let p = reference();
    let env = EnvInit::default();
    let mut points = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for tr in reference_traces() {
        worst = worst.max(max_bound_excess(&tr.points));
        points += tr.points.len();
    }
    for (protocol, n) in [(Protocol::Udd, 500), (Protocol::Pdd, 50), (Protocol::Cpmg, 100)] {
        let sched = PulseSchedule::generate(protocol, n).unwrap();
        let pts = trace_run(&p, &sched, &vec![PulseError::IDEAL; n], &env).unwrap();
        worst = worst.max(max_bound_excess(&pts));
        points += pts.len();
    }
    let sched = PulseSchedule::generate(Protocol::Udd, 200).unwrap();
    let noisy = monte_carlo_trace(
        &p,
        &sched,
        &ErrorModel::new(0.05, ErrorAxes::YAndZ, 3).unwrap(),
        20,
        &uniform_grid(&p, 50),
        &env,
        Execution::Parallel,
    )
    .unwrap();
    for k in 0..noisy.t.len() {
        let (s, q) = (noisy.s_first[k], noisy.q_first[k]);
        worst = worst.max(s * s + q * q - 1.0);
        worst = worst.max(q.abs() - (1.0 - s * s).max(0.0).sqrt());
        points += 1;
    }
    let small = ddrobust::make_params(700.0, 250.0, 400.0, 20.0, 8, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let envs: Vec<EnvInit> = (0..8).map(|_| random_env(&mut rng, 8)).collect();
    let scheds = vec![
        PulseSchedule::generate(Protocol::Udd, 7).unwrap(),
        PulseSchedule::generate(Protocol::Pdd, 4).unwrap(),
        PulseSchedule::custom(vec![0.13, 0.4, 0.41, 0.9]).unwrap(),
    ];
    let rep = check_q_bound(&small, &scheds, &envs).unwrap();
    worst = worst.max(rep.max_modulus_excess).max(rep.max_q_excess);
    points += rep.points;
    verdict(
        3,
        worst <= BOUND_TOL,
        &format!("{points} signal points; max bound excess {worst:.2e}"),
    );
}

#[test]
fn criterion_4_udd_vs_pdd() {
    let horizon = reference().horizon();
    let lead = |n: usize| {
        let (u, d) = (find(Protocol::Udd, n), find(Protocol::Pdd, n));
        let grid: Vec<(f64, f64, f64)> = u
            .iter()
            .zip(d)
            .filter(|(a, _)| a.t > 0.0)
            .map(|(a, b)| (a.t, a.s, b.s))
            .collect();
        grid
    };
    let n50 = lead(50);
    let udd_wins = n50.iter().filter(|(_, u, d)| u >= d).count();
    let early_ok = udd_wins == n50.len();
    let mut late = BTreeMap::new();
    for n in [200, 500] {
        let pts: Vec<_> = lead(n).into_iter().filter(|(t, _, _)| *t > horizon / 2.0).collect();
        let pdd_wins = pts.iter().filter(|(_, u, d)| d > u).count();
        late.insert(n, (pdd_wins, pts.len()));
    }
    let late_ok = late.values().any(|&(w, total)| w == total && total > 0);
    let last = |n: usize| {
        let (u, d) = (find(Protocol::Udd, n), find(Protocol::Pdd, n));
        (1.0 - u.last().unwrap().s, 1.0 - d.last().unwrap().s)
    };
    let (u50, d50) = last(50);
    verdict(
        4,
        early_ok && late_ok,
        &format!(
            "n=50: UDD >= PDD at {udd_wins}/{} grid points (1-s(T): UDD {u50:.3e}, PDD {d50:.3e}); \
             PDD > UDD for t > T/2 at n=200 {}/{}, n=500 {}/{}",
            n50.len(),
            late[&200].0,
            late[&200].1,
            late[&500].0,
            late[&500].1
        ),
    );
}

#[test]
fn criterion_5_ideal_udd500() {
    let p = reference();
    let sched = PulseSchedule::generate(Protocol::Udd, 500).unwrap();
    let pts = trace_run(&p, &sched, &[PulseError::IDEAL; 500], &EnvInit::default()).unwrap();
    let end = pts.last().unwrap();
    let loss = 1.0 - end.s;
    let ok = (1e-5..=1e-3).contains(&loss) && max_bound_excess(&pts) <= BOUND_TOL;
    verdict(5, ok, &format!("1-s(T) = {loss:.4e}, q(T) = {:.4e}", end.q));
}

#[test]
fn criterion_6_small_error_scaling() {
    let p = reference();
    let n = 500;
    let sched = PulseSchedule::generate(Protocol::Udd, n).unwrap();
    let env = EnvInit::default();
    let ideal = monte_carlo_signal(&p, &sched, &ErrorModel::ideal(), 1, &env, Execution::Parallel)
        .unwrap()
        .one_minus_s();
    let grid = small_regime_grid(6, n, 10.0).unwrap();
    assert!(grid.iter().all(|x| x * (n as f64).sqrt() <= 0.1 + 1e-12));
    let model = ErrorModel::new(0.0, ErrorAxes::YAndZ, 2024).unwrap();
    let sweep = sweep_xi(&p, &sched, &grid, REPS, &model, &env, Execution::Parallel).unwrap();
    let fit = fit_xi_sweep(&sweep, n).unwrap();
    let c2 = fit.c2_estimate.abs();
    let consistent = (fit.intercept - ideal).abs() <= 2.0 * fit.intercept_stderr;
    let ok = fit.r_squared >= 0.98 && consistent && (0.1..=10.0).contains(&c2);
    verdict(
        6,
        ok,
        &format!(
            "R^2 = {:.5}, intercept {:.3e} +- {:.2e} vs ideal {ideal:.3e}, |C2| = {c2:.3}",
            fit.r_squared, fit.intercept, fit.intercept_stderr
        ),
    );
}

#[test]
fn criterion_7_large_error_regime() {
    let r = udd500_mc(1.0 / 500f64.sqrt(), 77);
    let ok = r.one_minus_s() >= 0.1 && mc_excess(&r) <= BOUND_TOL;
    verdict(
        7,
        ok,
        &format!(
            "xi*sqrt(n) = 1: mean 1-s(T) = {:.4} +- {:.2e}",
            r.one_minus_s(),
            r.stderr_s
        ),
    );
}

#[test]
fn criterion_8_more_pulses_hurt() {
    let p = reference();
    let env = EnvInit::default();
    let run = |n: usize, xi: f64, seed: u64| {
        let sched = PulseSchedule::generate(Protocol::Udd, n).unwrap();
        let reps = if xi == 0.0 { 1 } else { REPS };
        let m = ErrorModel::new(xi, ErrorAxes::YAndZ, seed).unwrap();
        monte_carlo_signal(&p, &sched, &m, reps, &env, Execution::Parallel).unwrap()
    };
    let (a, b) = (run(200, 1e-2, 81), run(500, 1e-2, 82));
    let gap = b.one_minus_s() - a.one_minus_s();
    let sigma = (a.stderr_s.powi(2) + b.stderr_s.powi(2)).sqrt();
    let (i200, i500) = (run(200, 0.0, 0).one_minus_s(), run(500, 0.0, 0).one_minus_s());
    let ok = gap > 2.0 * sigma
        && i500 < i200
        && mc_excess(&a).max(mc_excess(&b)) <= BOUND_TOL;
    verdict(
        8,
        ok,
        &format!(
            "xi = 1e-2: 1-s(T) n=200 {:.3e} +- {:.1e}, n=500 {:.3e} +- {:.1e}; ideal n=200 {i200:.3e}, n=500 {i500:.3e}",
            a.one_minus_s(),
            a.stderr_s,
            b.one_minus_s(),
            b.stderr_s
        ),
    );
}

const DET_CONFIG: &str = r#"
[model]
dim = 256
periods = 10

[sequence]
protocol = "udd"
n = 40

[noise]
xi = 0.01
seed = 5

[run]
reps = 16
grid_points = 25

[sweep]
n_list = [10, 40]
count = 4
"#;

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.toml");
    fs::write(&cfg, DET_CONFIG).unwrap();
    let mut mismatches = Vec::new();
    let mut files = 0;
    for cmd in ["trace", "sweep-xi", "sweep-n", "compare"] {
        let mut outs = Vec::new();
        for (run, workers) in [(0, "1"), (1, "1"), (2, "2")] {
            let out = dir.path().join(format!("{cmd}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_ddrobust"))
                .args([cmd, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .env("DDROBUST_WORKERS", workers)
                .status()
                .unwrap();
            assert!(status.success(), "{cmd} failed");
            outs.push(csv_files(&out));
        }
        files += outs[0].len();
        if outs[0].is_empty() || outs.iter().any(|o| o != &outs[0]) {
            mismatches.push(cmd);
        }
    }
    verdict(
        9,
        mismatches.is_empty(),
        &format!(
            "{files} CSV files from 4 commands, 3 runs each (1 and 2 workers); mismatches: {mismatches:?}"
        ),
    );
}

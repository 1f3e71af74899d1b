use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ddrobust::experiments::{
    compare_protocols, fit_xi_sweep, lead_intervals, monte_carlo_trace, regime_warnings,
    sweep_n, sweep_xi, uniform_grid, Leader, SMALL_REGIME_MAX,
};
use ddrobust::observables::{initial_pair, trace_evolution, Emit};
use ddrobust::oracle::{run_suite, Fault, Level};
use ddrobust::par::Execution;
use ddrobust::propagator::Evolution;
use ddrobust::{build_timeline, sample_errors, Protocol};

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, write_csv, Manifest};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<ddrobust::Error> for CliError {
    fn from(e: ddrobust::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    let out = cfg.run.out.as_path();
    fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}

fn warn(lines: impl IntoIterator<Item = String>) {
    for l in lines {
        eprintln!("warning: {l}");
    }
}

fn finish(
    command: &str,
    cfg: &RunConfig,
    started: Instant,
    outputs: &[String],
) -> Result<(), CliError> {
    let params = cfg.params()?;
    let env = cfg.env()?;
    let m = Manifest {
        command,
        config: cfg,
        params: &params,
        env: &env,
        elapsed: started.elapsed(),
        outputs,
    };
    fs::write(cfg.run.out.join("manifest.txt"), m.render())?;
    Ok(())
}

pub fn trace(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = cfg.params()?;
    let env = cfg.env()?;
    let sched = cfg.schedule()?;
    let model = cfg.error_model()?;
    warn(params.warnings());
    warn(model.warnings());
    let out = prepare_out(cfg)?;
    let ensemble = model.xi > 0.0 && cfg.run.reps > 1;
    if ensemble {
        let grid = uniform_grid(&params, cfg.run.grid_points);
        let tr = monte_carlo_trace(
            &params,
            &sched,
            &model,
            cfg.run.reps,
            &grid,
            &env,
            Execution::Parallel,
        )?;
        let rows: Vec<Vec<f64>> = (0..tr.t.len())
            .map(|k| {
                vec![
                    tr.t[k],
                    tr.s_first[k],
                    tr.q_first[k],
                    tr.s_mean[k],
                    tr.s_stderr[k],
                    tr.q_mean[k],
                ]
            })
            .collect();
        write_csv(
            &out.join("trace.csv"),
            &["t", "s", "q", "s_mean", "s_stderr", "q_mean"],
            &rows,
        )?;
    } else {
        let errors = sample_errors(sched.len(), &model.realization(0));
        let evo = Evolution::new(&params, build_timeline(&params, &sched)?);
        let mut ws = evo.workspace();
        let pts = trace_evolution(
            &evo,
            &initial_pair(&params, &env)?,
            &errors,
            Emit::Every(cfg.run.stride),
            &mut ws,
        )?;
        let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.t, p.s, p.q]).collect();
        write_csv(&out.join("trace.csv"), &["t", "s", "q"], &rows)?;
    }
    finish("trace", cfg, started, &["trace.csv".into()])
}

pub fn sweep_xi_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = cfg.params()?;
    let env = cfg.env()?;
    let sched = cfg.schedule()?;
    let model = cfg.error_model()?;
    let n = sched.len();
    let xi_list = cfg.xi_list(n.max(1))?;
    let mut distinct = xi_list.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(CliError::Config(format!(
            "degenerate sweep: {} distinct xi value(s), a fit needs at least 3",
            distinct.len()
        )));
    }
    warn(params.warnings());
    let regime = regime_warnings(&xi_list, n);
    let small = regime.is_empty();
    warn(regime);
    let out = prepare_out(cfg)?;
    let sweep = sweep_xi(
        &params,
        &sched,
        &xi_list,
        cfg.run.reps,
        &model,
        &env,
        Execution::Parallel,
    )?;
    let rows: Vec<Vec<f64>> = sweep
        .iter()
        .map(|p| vec![p.xi, p.xi2, p.one_minus_s_mean, p.stderr])
        .collect();
    write_csv(
        &out.join("sweep.csv"),
        &["xi", "xi2", "one_minus_s_mean", "stderr"],
        &rows,
    )?;
    let mut fit_txt = String::new();
    if small && n > 0 {
        let fit = fit_xi_sweep(&sweep, n)?;
        let _ = writeln!(fit_txt, "slope = {}", num(fit.slope));
        let _ = writeln!(fit_txt, "slope_stderr = {}", num(fit.slope_stderr));
        let _ = writeln!(fit_txt, "intercept = {}", num(fit.intercept));
        let _ = writeln!(fit_txt, "intercept_stderr = {}", num(fit.intercept_stderr));
        let _ = writeln!(fit_txt, "r_squared = {}", num(fit.r_squared));
        let _ = writeln!(fit_txt, "c2_estimate = {}", num(fit.c2_estimate));
        let _ = writeln!(fit_txt, "n = {n}");
        let _ = writeln!(fit_txt, "points = {}", fit.points);
    } else {
        let _ = writeln!(
            fit_txt,
            "no fit: grid leaves the small-error regime (xi*sqrt(n) <= {SMALL_REGIME_MAX}) or n = 0"
        );
    }
    fs::write(out.join("fit.txt"), fit_txt)?;
    finish(
        "sweep-xi",
        cfg,
        started,
        &["sweep.csv".into(), "fit.txt".into()],
    )
}

pub fn sweep_n_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = cfg.params()?;
    let env = cfg.env()?;
    let model = cfg.error_model()?;
    let protocol = cfg.protocol()?;
    if protocol == Protocol::Custom {
        return Err(CliError::Config("sweep-n needs a generated protocol".into()));
    }
    warn(params.warnings());
    warn(model.warnings());
    let out = prepare_out(cfg)?;
    let grid = uniform_grid(&params, cfg.run.grid_points);
    let traces = sweep_n(
        &params,
        protocol,
        &cfg.sweep.n_list,
        &model,
        cfg.run.reps,
        &grid,
        &env,
        Execution::Parallel,
    )?;
    let mut outputs = Vec::new();
    let mut summary = Vec::new();
    for tr in &traces {
        let name = format!("sweep_n_{}.csv", tr.n);
        let rows: Vec<Vec<f64>> = (0..tr.t.len())
            .map(|k| vec![tr.t[k], tr.s_mean[k], tr.s_stderr[k], tr.q_mean[k]])
            .collect();
        write_csv(&out.join(&name), &["t", "s_mean", "s_stderr", "q_mean"], &rows)?;
        outputs.push(name);
        let (loss, err) = tr.final_one_minus_s();
        summary.push(vec![tr.n as f64, loss, err]);
    }
    write_csv(
        &out.join("summary.csv"),
        &["n", "one_minus_s_mean", "stderr"],
        &summary,
    )?;
    outputs.push("summary.csv".into());
    finish("sweep-n", cfg, started, &outputs)
}

fn leader_name(l: Leader, a: Protocol, b: Protocol) -> String {
    match l {
        Leader::First => a.to_string(),
        Leader::Second => b.to_string(),
        Leader::Tie => "tie".into(),
    }
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = cfg.params()?;
    let env = cfg.env()?;
    let protocols = cfg.protocols()?;
    if protocols.is_empty() {
        return Err(CliError::Config("sweep.protocols must not be empty".into()));
    }
    warn(params.warnings());
    let out = prepare_out(cfg)?;
    let grid = uniform_grid(&params, cfg.run.grid_points);
    let mut unique: Vec<Protocol> = Vec::new();
    for p in &protocols {
        if !unique.contains(p) {
            unique.push(*p);
        }
    }
    let traces = compare_protocols(
        &params,
        &cfg.sweep.n_list,
        &unique,
        &grid,
        &env,
        Execution::Parallel,
    )?;
    let mut outputs = Vec::new();
    for tr in &traces {
        let name = format!("compare_{}_n{}.csv", tr.protocol, tr.n);
        let rows: Vec<Vec<f64>> = tr.points.iter().map(|p| vec![p.t, p.s, p.q]).collect();
        write_csv(&out.join(&name), &["t", "s", "q"], &rows)?;
        outputs.push(name);
    }
    let a = protocols[0];
    let b = *protocols.get(1).unwrap_or(&a);
    let find = |p: Protocol, n: usize| {
        traces
            .iter()
            .find(|t| t.protocol == p && t.n == n)
            .expect("trace computed")
    };
    let horizon = params.horizon();
    let mut text = String::new();
    let _ = writeln!(text, "# {a} vs {b}; times as fractions of T = {}", num(horizon));
    for &n in &cfg.sweep.n_list {
        let (ta, tb) = (find(a, n), find(b, n));
        let max_diff = ta
            .points
            .iter()
            .zip(&tb.points)
            .map(|(x, y)| (x.s - y.s).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(text, "n = {n}  max |s_{a} - s_{b}| = {}", num(max_diff));
        if max_diff == 0.0 {
            let _ = writeln!(text, "  identical traces: zero difference on (0,T]");
            continue;
        }
        for iv in lead_intervals(&ta.points, &tb.points, 0.0) {
            let _ = writeln!(
                text,
                "  {} leads on [{:.4}, {:.4}]",
                leader_name(iv.leader, a, b),
                iv.start / horizon,
                iv.end / horizon
            );
        }
    }
    fs::write(out.join("crossover.txt"), text)?;
    outputs.push("crossover.txt".into());
    finish("compare", cfg, started, &outputs)
}

pub fn verify(level: Level, fault: Fault) -> Result<(), CliError> {
    let started = Instant::now();
    let results = run_suite(level, fault)?;
    println!("{:<28} {:>12} {:>12}  result", "check", "value", "tolerance");
    let mut failed = Vec::new();
    for r in &results {
        println!(
            "{:<28} {:>12.3e} {:>12.3e}  {}  {}",
            r.name,
            r.value,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
        if !r.passed {
            failed.push(r.name.clone());
        }
    }
    println!("elapsed {:.1} s", started.elapsed().as_secs_f64());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed.join(", ")))
    }
}

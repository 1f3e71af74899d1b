//! Monte Carlo over error realizations, parameter sweeps and scaling fits.

use crate::error::{invalid, Error, Result};
use crate::model::{EnvInit, ModelParams};
use crate::noise::{derive_seed, sample_errors, ErrorModel, PulseError};
use crate::observables::{initial_pair, trace_evolution, Emit, SignalPoint};
use crate::par::{compensated_sum, map_indexed, map_indexed_with, Execution};
use crate::propagator::Evolution;
use crate::sequences::{build_timeline, Protocol, PulseSchedule};

pub const DEFAULT_REPS: usize = 200;
/// Upper end of the small-error regime in `ξ√n`.
pub const SMALL_REGIME_MAX: f64 = 0.1;
/// Bounds of the large-error regime in `ξ√n`.
pub const LARGE_REGIME: (f64, f64) = (0.3, 1.5);

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub mean_s: f64,
    pub stderr_s: f64,
    pub mean_q: f64,
    pub realizations: usize,
    pub s_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

/// `(mean, sample std / √len)`; exactly `(v, 0)` when all values equal `v`.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl McResult {
    pub fn from_values(s_values: Vec<f64>, q_values: Vec<f64>) -> Self {
        let (mean_s, stderr_s) = mean_stderr(&s_values);
        let (mean_q, _) = mean_stderr(&q_values);
        Self {
            mean_s,
            stderr_s,
            mean_q,
            realizations: s_values.len(),
            s_values,
            q_values,
        }
    }

    pub fn one_minus_s(&self) -> f64 {
        1.0 - self.mean_s
    }
}

/// Final `s_ε(T)` over `reps` error realizations.
pub fn monte_carlo_signal(
    params: &ModelParams,
    schedule: &PulseSchedule,
    model: &ErrorModel,
    reps: usize,
    env: &EnvInit,
    exec: Execution,
) -> Result<McResult> {
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    let evo = Evolution::new(params, build_timeline(params, schedule)?);
    let init = initial_pair(params, env)?;
    let finals = map_indexed_with(
        reps,
        exec,
        || evo.workspace(),
        |ws, i| {
            let errs = sample_errors(schedule.len(), &model.realization(i as u64));
            trace_evolution(&evo, &init, &errs, Emit::Final, ws).map(|p| *p.last().unwrap())
        },
    )
    .into_iter()
    .collect::<Result<Vec<SignalPoint>>>()?;
    Ok(McResult::from_values(
        finals.iter().map(|p| p.s).collect(),
        finals.iter().map(|p| p.q).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub xi: f64,
    pub xi2: f64,
    pub one_minus_s_mean: f64,
    pub stderr: f64,
}

/// One Monte Carlo estimate of `1 − s_ε(T)` per ξ; the ξ at position `i` uses
/// seed `derive_seed(model.seed, i)`.
pub fn sweep_xi(
    params: &ModelParams,
    schedule: &PulseSchedule,
    xi_list: &[f64],
    reps: usize,
    model: &ErrorModel,
    env: &EnvInit,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    if xi_list.is_empty() {
        return Err(invalid("xi_list", "must not be empty"));
    }
    xi_list
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let m = ErrorModel::new(xi, model.axes, derive_seed(model.seed, i as u64))?;
            let mc = monte_carlo_signal(params, schedule, &m, reps, env, exec)?;
            Ok(SweepPoint {
                xi,
                xi2: xi * xi,
                one_minus_s_mean: mc.one_minus_s(),
                stderr: mc.stderr_s,
            })
        })
        .collect()
}

/// Warnings for sweep grids outside the small-error regime.
pub fn regime_warnings(xi_list: &[f64], n: usize) -> Vec<String> {
    let worst = xi_list.iter().fold(0.0f64, |m, x| m.max(x.abs())) * (n as f64).sqrt();
    if worst > SMALL_REGIME_MAX * (1.0 + 1e-12) {
        vec![format!(
            "max xi*sqrt(n) = {worst:.3} exceeds {SMALL_REGIME_MAX}; linear xi^2 scaling not expected"
        )]
    } else {
        Vec::new()
    }
}

/// `count` geometric ξ values with `ξ√n` spanning `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(invalid("grid", "need 0 < lo <= hi"));
    }
    if count == 0 || n == 0 {
        return Err(invalid("grid", "need count >= 1 and n >= 1"));
    }
    let root = (n as f64).sqrt();
    if count == 1 {
        return Ok(vec![lo / root]);
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    Ok((0..count)
        .map(|i| lo * ratio.powi(i as i32) / root)
        .collect())
}

/// Geometric grid with `ξ√n` from `0.1/span` up to the small-regime bound.
pub fn small_regime_grid(count: usize, n: usize, span: f64) -> Result<Vec<f64>> {
    geometric_grid(SMALL_REGIME_MAX / span, SMALL_REGIME_MAX, count, n)
}

/// Geometric grid over the large-error regime.
pub fn large_regime_grid(count: usize, n: usize) -> Result<Vec<f64>> {
    geometric_grid(LARGE_REGIME.0, LARGE_REGIME.1, count, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    /// Standard error of `y`; zero or NaN when unknown.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// `slope / n`; NaN from [`fit_linear`] alone.
    pub c2_estimate: f64,
    pub points: usize,
}

/// Unweighted least squares `y = slope·x + intercept`.
///
/// Parameter standard errors propagate the per-point `sigma` through the
/// linear estimator when every point carries one; otherwise they come from the
/// residual variance.
pub fn fit_linear(points: &[FitPoint]) -> Result<FitResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = compensated_sum(points.iter().map(|p| p.x)) / nf;
    let my = compensated_sum(points.iter().map(|p| p.y)) / nf;
    let sxx = compensated_sum(points.iter().map(|p| (p.x - mx).powi(2)));
    if sxx <= f64::EPSILON * compensated_sum(points.iter().map(|p| p.x * p.x)).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let sxy = compensated_sum(points.iter().map(|p| (p.x - mx) * (p.y - my)));
    let syy = compensated_sum(points.iter().map(|p| (p.y - my).powi(2)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = compensated_sum(
        points
            .iter()
            .map(|p| (p.y - intercept - slope * p.x).powi(2)),
    );
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let known = points.iter().all(|p| p.sigma.is_finite() && p.sigma > 0.0);
    let (slope_stderr, intercept_stderr) = if known {
        // slope = Σ a_i y_i, intercept = Σ b_i y_i
        let a = |p: &FitPoint| (p.x - mx) / sxx;
        let b = |p: &FitPoint| 1.0 / nf - mx * a(p);
        (
            compensated_sum(points.iter().map(|p| (a(p) * p.sigma).powi(2))).sqrt(),
            compensated_sum(points.iter().map(|p| (b(p) * p.sigma).powi(2))).sqrt(),
        )
    } else {
        let s2 = ss_res / (nf - 2.0);
        (
            (s2 / sxx).sqrt(),
            (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        )
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        intercept_stderr,
        c2_estimate: f64::NAN,
        points: n,
    })
}

/// Fits `1 − mean s_ε(T)` against ξ² and sets `c2_estimate = slope / n`.
pub fn fit_xi_sweep(sweep: &[SweepPoint], n: usize) -> Result<FitResult> {
    if n == 0 {
        return Err(invalid("n", "C2 needs at least one pulse"));
    }
    let pts: Vec<FitPoint> = sweep
        .iter()
        .map(|p| FitPoint {
            x: p.xi2,
            y: p.one_minus_s_mean,
            sigma: p.stderr,
        })
        .collect();
    let mut fit = fit_linear(&pts)?;
    fit.c2_estimate = fit.slope / n as f64;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderReport {
    pub s_ideal: f64,
    pub q_ideal: f64,
    pub xi_sqrt_n: f64,
    /// Mean of `s_ε(T) − s(T)`.
    pub shift_mean: f64,
    /// Standard deviation of `s_ε(T) − s(T)` across realizations.
    pub shift_std: f64,
    /// `2|q(T)|ξ√n`.
    pub first_order_scale: f64,
    /// `2√(1 − s(T)²)ξ√n`.
    pub first_order_bound: f64,
    /// `ξ²n`.
    pub second_order_scale: f64,
    /// `|q(T)| < ξ√n`.
    pub first_order_negligible: bool,
}

/// Compares the Monte Carlo shift of `s_ε(T)` with the first- and
/// second-order scales of the error expansion.
pub fn first_order_check(
    params: &ModelParams,
    schedule: &PulseSchedule,
    model: &ErrorModel,
    reps: usize,
    env: &EnvInit,
    exec: Execution,
) -> Result<FirstOrderReport> {
    let ideal = monte_carlo_signal(params, schedule, &ErrorModel::ideal(), 1, env, exec)?;
    let (s, q) = (ideal.mean_s, ideal.mean_q);
    let mc = monte_carlo_signal(params, schedule, model, reps, env, exec)?;
    let shifts: Vec<f64> = mc.s_values.iter().map(|v| v - s).collect();
    let (shift_mean, stderr) = mean_stderr(&shifts);
    let shift_std = stderr * (shifts.len() as f64).sqrt();
    let n = schedule.len() as f64;
    let xsn = model.xi * n.sqrt();
    Ok(FirstOrderReport {
        s_ideal: s,
        q_ideal: q,
        xi_sqrt_n: xsn,
        shift_mean,
        shift_std,
        first_order_scale: 2.0 * q.abs() * xsn,
        first_order_bound: 2.0 * (1.0 - s * s).max(0.0).sqrt() * xsn,
        second_order_scale: model.xi * model.xi * n,
        first_order_negligible: q.abs() < xsn,
    })
}

/// `count` equally spaced times in `(0, T]`.
pub fn uniform_grid(params: &ModelParams, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| params.horizon() * i as f64 / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    pub protocol: Protocol,
    pub n: usize,
    /// Point at `t = 0` followed by one point per grid time.
    pub points: Vec<SignalPoint>,
}

fn grid_trace(
    params: &ModelParams,
    schedule: &PulseSchedule,
    grid: &[f64],
    errors: &[PulseError],
    env: &EnvInit,
) -> Result<Vec<SignalPoint>> {
    let tl = build_timeline(params, schedule)?.with_marks(grid);
    let evo = Evolution::new(params, tl);
    let mut ws = evo.workspace();
    trace_evolution(&evo, &initial_pair(params, env)?, errors, Emit::Marks, &mut ws)
}

/// Ideal traces of every `(protocol, n)` on a shared grid.
pub fn compare_protocols(
    params: &ModelParams,
    n_list: &[usize],
    protocols: &[Protocol],
    grid: &[f64],
    env: &EnvInit,
    exec: Execution,
) -> Result<Vec<ProtocolTrace>> {
    let jobs: Vec<(Protocol, usize)> = protocols
        .iter()
        .flat_map(|&p| n_list.iter().map(move |&n| (p, n)))
        .collect();
    map_indexed(jobs.len(), exec, |i| {
        let (protocol, n) = jobs[i];
        let sched = PulseSchedule::generate(protocol, n)?;
        let points = grid_trace(params, &sched, grid, &vec![PulseError::IDEAL; n], env)?;
        Ok(ProtocolTrace {
            protocol,
            n,
            points,
        })
    })
    .into_iter()
    .collect()
}

/// Which of two traces has the larger `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leader {
    First,
    Second,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadInterval {
    pub leader: Leader,
    pub start: f64,
    pub end: f64,
}

/// Maximal runs of grid points with the same leader, comparing points at
/// equal index. Differences within `tie_tol` count as ties.
pub fn lead_intervals(a: &[SignalPoint], b: &[SignalPoint], tie_tol: f64) -> Vec<LeadInterval> {
    let mut out: Vec<LeadInterval> = Vec::new();
    for (pa, pb) in a.iter().zip(b).filter(|(p, _)| p.t > 0.0) {
        let d = pa.s - pb.s;
        let leader = if d > tie_tol {
            Leader::First
        } else if d < -tie_tol {
            Leader::Second
        } else {
            Leader::Tie
        };
        match out.last_mut() {
            Some(last) if last.leader == leader => last.end = pa.t,
            _ => out.push(LeadInterval {
                leader,
                start: pa.t,
                end: pa.t,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTrace {
    pub n: usize,
    pub t: Vec<f64>,
    pub s_mean: Vec<f64>,
    pub s_stderr: Vec<f64>,
    pub q_mean: Vec<f64>,
    /// `s` of realization 0.
    pub s_first: Vec<f64>,
    /// `q` of realization 0.
    pub q_first: Vec<f64>,
}

impl NoisyTrace {
    pub fn final_one_minus_s(&self) -> (f64, f64) {
        (
            1.0 - self.s_mean.last().copied().unwrap_or(f64::NAN),
            self.s_stderr.last().copied().unwrap_or(f64::NAN),
        )
    }
}

/// Mean noisy trace on `grid` over `reps` realizations.
pub fn monte_carlo_trace(
    params: &ModelParams,
    schedule: &PulseSchedule,
    model: &ErrorModel,
    reps: usize,
    grid: &[f64],
    env: &EnvInit,
    exec: Execution,
) -> Result<NoisyTrace> {
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    let tl = build_timeline(params, schedule)?.with_marks(grid);
    let evo = Evolution::new(params, tl);
    let init = initial_pair(params, env)?;
    let traces = map_indexed_with(
        reps,
        exec,
        || evo.workspace(),
        |ws, i| {
            let errs = sample_errors(schedule.len(), &model.realization(i as u64));
            trace_evolution(&evo, &init, &errs, Emit::Marks, ws)
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let len = traces[0].len();
    let mut out = NoisyTrace {
        n: schedule.len(),
        t: traces[0].iter().map(|p| p.t).collect(),
        s_mean: Vec::with_capacity(len),
        s_stderr: Vec::with_capacity(len),
        q_mean: Vec::with_capacity(len),
        s_first: traces[0].iter().map(|p| p.s).collect(),
        q_first: traces[0].iter().map(|p| p.q).collect(),
    };
    for k in 0..len {
        let s: Vec<f64> = traces.iter().map(|tr| tr[k].s).collect();
        let q: Vec<f64> = traces.iter().map(|tr| tr[k].q).collect();
        let (sm, se) = mean_stderr(&s);
        out.s_mean.push(sm);
        out.s_stderr.push(se);
        out.q_mean.push(mean_stderr(&q).0);
    }
    Ok(out)
}

/// Mean noisy traces of one protocol family for each pulse count.
#[allow(clippy::too_many_arguments)]
pub fn sweep_n(
    params: &ModelParams,
    protocol: Protocol,
    n_list: &[usize],
    model: &ErrorModel,
    reps: usize,
    grid: &[f64],
    env: &EnvInit,
    exec: Execution,
) -> Result<Vec<NoisyTrace>> {
    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sched = PulseSchedule::generate(protocol, n)?;
            let m = ErrorModel::new(model.xi, model.axes, derive_seed(model.seed, i as u64))?;
            monte_carlo_trace(params, &sched, &m, reps, grid, env, exec)
        })
        .collect()
}

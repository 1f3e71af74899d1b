//! Dense-matrix brute force for small rotator dimensions.
//!
//! Every factor of the evolution is built as an explicit `4N × 4N` matrix in
//! the [`JointState`] basis: free segments from an eigendecomposition of the
//! 4×4 qubit Hamiltonian tensored with diagonal kinetic phases, kicks through
//! an explicit DFT matrix, pulses from Pauli matrices. Nothing here shares code
//! with the split-operator propagator beyond the timeline itself.
//!
//! The same machinery checks the operator identities behind the error
//! expansion of the signal: `R_ε0 = Π ε_x,k R`,
//! `R_ε1 = i Σ (−1)^{k+1} ε_y,k R σ_z^S`, and the second-order remainder.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{make_params, EnvInit, JointState, ModelParams, RotatorInit, Spin};
use crate::noise::{ErrorAxes, PulseError};
use crate::observables::{initial_pair, trace_run};
use crate::propagator::Evolution;
use crate::sequences::{build_timeline, EventKind, Protocol, PulseSchedule, Timeline};

type C = Complex64;
type Mat = DMatrix<C>;

/// Largest rotator dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 32;

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

fn check_dim(params: &ModelParams) -> Result<()> {
    if params.dim() > MAX_ORACLE_DIM {
        return Err(Error::OracleTooLarge {
            dim: params.dim(),
            max: MAX_ORACLE_DIM,
        });
    }
    Ok(())
}

pub fn sigma_x() -> Mat {
    Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> Mat {
    Mat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> Mat {
    Mat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Explicit `4N × 4N` operator in the joint basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(pub Mat);

impl DenseOperator {
    pub fn identity(params: &ModelParams) -> Self {
        Self(Mat::identity(params.joint_dim(), params.joint_dim()))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn apply(&self, state: &JointState) -> JointState {
        let v = DVector::from_column_slice(state.amplitudes());
        let out = &self.0 * v;
        JointState::from_amplitudes(state.dim(), out.as_slice().to_vec())
            .expect("operator dimension matches state")
    }

    /// `max |U†U − 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.0.nrows();
        max_abs(&(self.0.adjoint() * &self.0 - Mat::identity(n, n)))
    }
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(−iτH)` for Hermitian `H` by eigendecomposition.
pub fn expm_hermitian(h: &Mat, tau: f64) -> Mat {
    let eig = h.clone().symmetric_eigen();
    let phases = Mat::from_diagonal(&eig.eigenvalues.map(|e| C::from_polar(1.0, -tau * e)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `ω_A σ_x^A + g σ_z^S σ_z^A` on S ⊗ A.
pub fn qubit_hamiltonian(params: &ModelParams) -> Mat {
    let id = Mat::identity(2, 2);
    id.kronecker(&sigma_x()) * C::from(params.omega_a())
        + sigma_z().kronecker(&sigma_z()) * C::from(params.g())
}

/// `exp(−iτ p²/2)` on the rotator.
fn kinetic(params: &ModelParams, tau: f64) -> Mat {
    let n = params.dim();
    Mat::from_diagonal(&DVector::from_fn(n, |j, _| {
        let l = params.momentum(j) as f64;
        C::from_polar(1.0, (-0.5 * tau * l * l).rem_euclid(std::f64::consts::TAU))
    }))
}

/// Free evolution of duration `tau`.
pub fn dense_free(params: &ModelParams, tau: f64) -> Mat {
    expm_hermitian(&qubit_hamiltonian(params), tau).kronecker(&kinetic(params, tau))
}

/// `F[m, j] = exp(i l_j θ_m)/√N`, mapping momentum amplitudes to position amplitudes.
pub fn dft_matrix(params: &ModelParams) -> Mat {
    let n = params.dim();
    let norm = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |m, j| {
        let arg = params.momentum(j) as f64 * params.theta(m);
        C::from_polar(norm, arg.rem_euclid(std::f64::consts::TAU))
    })
}

/// One kick `exp(−i(k + λσ_z^A) cos θ)`.
pub fn dense_kick(params: &ModelParams) -> Mat {
    let n = params.dim();
    let f = dft_matrix(params);
    let mut out = Mat::zeros(4 * n, 4 * n);
    for b in 0..4 {
        let a_sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        let strength = params.kick_strength() + params.lambda() * a_sign;
        let diag = Mat::from_diagonal(&DVector::from_fn(n, |m, _| {
            let arg = -strength * params.theta(m).cos();
            C::from_polar(1.0, arg.rem_euclid(std::f64::consts::TAU))
        }));
        let block = f.adjoint() * diag * &f;
        out.view_mut((b * n, b * n), (n, n)).copy_from(&block);
    }
    out
}

/// 2×2 pulse `ε_x σ_x + ε_y σ_y + ε_z σ_z` built from Pauli matrices.
pub fn pulse_2x2(err: &PulseError) -> Mat {
    sigma_x() * C::from(err.eps_x())
        + sigma_y() * C::from(err.eps_y())
        + sigma_z() * C::from(err.eps_z())
}

/// Lifts a 2×2 operator on S to the joint space.
pub fn on_system(params: &ModelParams, op: &Mat) -> Mat {
    op.kronecker(&Mat::identity(2 * params.dim(), 2 * params.dim()))
}

/// Explicit product of all factors of `timeline`.
pub fn dense_evolution(
    params: &ModelParams,
    timeline: &Timeline,
    errors: &[PulseError],
) -> Result<DenseOperator> {
    check_dim(params)?;
    if errors.len() != timeline.pulse_count() {
        return Err(Error::ErrorCountMismatch {
            expected: timeline.pulse_count(),
            actual: errors.len(),
        });
    }
    let frame = PulseFrame::new(params, timeline)?;
    let pulses: Vec<Mat> = errors
        .iter()
        .map(|e| on_system(params, &pulse_2x2(e)))
        .collect();
    Ok(DenseOperator(frame.compose(|k| pulses[k].clone())))
}

/// The evolution split at the pulses: `R = U_n P_n ⋯ U_1 P_1 U_0`.
#[derive(Debug, Clone)]
pub struct PulseFrame {
    params: ModelParams,
    intervals: Vec<Mat>,
}

impl PulseFrame {
    pub fn new(params: &ModelParams, timeline: &Timeline) -> Result<Self> {
        check_dim(params)?;
        let dim = params.joint_dim();
        let kick = dense_kick(params);
        let mut intervals = Vec::with_capacity(timeline.pulse_count() + 1);
        let mut current = Mat::identity(dim, dim);
        for (event, &tau) in timeline.events().iter().zip(timeline.durations()) {
            if tau > 0.0 {
                current = dense_free(params, tau) * current;
            }
            match event.kind {
                EventKind::Kick => current = &kick * current,
                EventKind::Pulse(_) => {
                    intervals.push(std::mem::replace(&mut current, Mat::identity(dim, dim)))
                }
                EventKind::Mark => {}
            }
        }
        if timeline.tail() > 0.0 {
            current = dense_free(params, timeline.tail()) * current;
        }
        intervals.push(current);
        Ok(Self {
            params: params.clone(),
            intervals,
        })
    }

    pub fn pulse_count(&self) -> usize {
        self.intervals.len() - 1
    }

    /// `U_n P_n ⋯ P_1 U_0` with `P_k = pulse(k)` (zero-based).
    pub fn compose<F: FnMut(usize) -> Mat>(&self, mut pulse: F) -> Mat {
        let mut out = self.intervals[0].clone();
        for (k, u) in self.intervals.iter().enumerate().skip(1) {
            out = u * pulse(k - 1) * out;
        }
        out
    }

    /// Ideal evolution `R` (every pulse σ_x).
    pub fn ideal(&self) -> Mat {
        let x = on_system(&self.params, &sigma_x());
        self.compose(|_| x.clone())
    }

    /// Exact `R_ε`.
    pub fn noisy(&self, errors: &[PulseError]) -> Mat {
        self.compose(|k| on_system(&self.params, &pulse_2x2(&errors[k])))
    }

    /// `R_ε0`: each pulse replaced by `ε_x,k σ_x`.
    pub fn eps0(&self, errors: &[PulseError]) -> Mat {
        let x = sigma_x();
        self.compose(|k| on_system(&self.params, &(&x * C::from(errors[k].eps_x()))))
    }

    /// `R_ε1`: sum over single `ε_y,k σ_y` substitutions, other pulses ideal.
    pub fn eps1(&self, eps_y: &[f64]) -> Mat {
        let x = on_system(&self.params, &sigma_x());
        let y = on_system(&self.params, &sigma_y());
        let dim = self.params.joint_dim();
        let mut sum = Mat::zeros(dim, dim);
        for k in 0..self.pulse_count() {
            let term = self.compose(|j| if j == k { &y * C::from(eps_y[k]) } else { x.clone() });
            sum += term;
        }
        sum
    }

    /// `R_ε2`: sum over pairs of `ε_y σ_y` substitutions, other pulses ideal.
    pub fn eps2(&self, eps_y: &[f64]) -> Mat {
        let x = on_system(&self.params, &sigma_x());
        let y = on_system(&self.params, &sigma_y());
        let dim = self.params.joint_dim();
        let mut sum = Mat::zeros(dim, dim);
        let n = self.pulse_count();
        for k in 0..n {
            for j in 0..k {
                let term = self.compose(|i| {
                    if i == k || i == j {
                        &y * C::from(eps_y[i])
                    } else {
                        x.clone()
                    }
                });
                sum += term;
            }
        }
        sum
    }

    /// `R_ε2` by a three-accumulator recursion over pulses; algebraically the
    /// same sum as [`PulseFrame::eps2`] in `O(n)` products.
    pub fn eps2_recursive(&self, eps_y: &[f64]) -> Mat {
        let x = on_system(&self.params, &sigma_x());
        let y = on_system(&self.params, &sigma_y());
        let dim = self.params.joint_dim();
        let mut a0 = self.intervals[0].clone();
        let mut a1 = Mat::zeros(dim, dim);
        let mut a2 = Mat::zeros(dim, dim);
        for (k, u) in self.intervals.iter().enumerate().skip(1) {
            let ey = C::from(eps_y[k - 1]);
            let n2 = u * (&x * &a2 + &y * &a1 * ey);
            let n1 = u * (&x * &a1 + &y * &a0 * ey);
            a0 = u * &x * &a0;
            a1 = n1;
            a2 = n2;
        }
        a2
    }
}

/// `⟨↓χ| A† σ_x^S B |↑χ⟩`.
pub fn sigma_x_element(params: &ModelParams, a: &Mat, b: &Mat, env: &EnvInit) -> Result<C> {
    let [up, down] = initial_pair(params, env)?;
    let up = DVector::from_column_slice(up.amplitudes());
    let down = DVector::from_column_slice(down.amplitudes());
    let sx = on_system(params, &sigma_x());
    Ok((a * down).dotc(&(sx * (b * up))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eps0Report {
    /// `max |R_ε0 − Π ε_x,k R|`.
    pub operator_residual: f64,
    /// `|s_ε0 − Π(1 − ε_y,k² − ε_z,k²) s|`.
    pub signal_residual: f64,
}

pub fn check_eps0_identity(
    params: &ModelParams,
    timeline: &Timeline,
    errors: &[PulseError],
    env: &EnvInit,
) -> Result<Eps0Report> {
    let frame = PulseFrame::new(params, timeline)?;
    if errors.len() != frame.pulse_count() {
        return Err(Error::ErrorCountMismatch {
            expected: frame.pulse_count(),
            actual: errors.len(),
        });
    }
    let r = frame.ideal();
    let r0 = frame.eps0(errors);
    let scale: f64 = errors.iter().map(|e| e.eps_x()).product();
    let operator_residual = max_abs(&(&r0 - &r * C::from(scale)));
    let s = sigma_x_element(params, &r, &r, env)?.re;
    let s0 = sigma_x_element(params, &r0, &r0, env)?.re;
    let shrink: f64 = errors
        .iter()
        .map(|e| 1.0 - e.eps_y() * e.eps_y() - e.eps_z() * e.eps_z())
        .product();
    Ok(Eps0Report {
        operator_residual,
        signal_residual: (s0 - shrink * s).abs(),
    })
}

/// Deliberate defects used to confirm that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flip the sign of the first pulse's ε_y when building `R_ε1` by definition.
    FlipPulseSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eps1Report {
    /// `max |R_ε1 − i Σ(−1)^{k+1} ε_y,k R σ_z^S|`; exact up to rounding.
    pub ideal_residual: f64,
    /// Same with `R_ε0` in place of `R`; agrees to second order in ε.
    pub eps0_residual: f64,
}

pub fn check_eps1_identity(
    params: &ModelParams,
    timeline: &Timeline,
    errors: &[PulseError],
    fault: Fault,
) -> Result<Eps1Report> {
    if errors.iter().any(|e| e.eps_z() != 0.0) {
        return Err(Error::Unsupported(
            "first-order identity holds for y-axis errors only".into(),
        ));
    }
    let frame = PulseFrame::new(params, timeline)?;
    if errors.len() != frame.pulse_count() {
        return Err(Error::ErrorCountMismatch {
            expected: frame.pulse_count(),
            actual: errors.len(),
        });
    }
    let mut eps_y: Vec<f64> = errors.iter().map(|e| e.eps_y()).collect();
    let alternating: f64 = eps_y
        .iter()
        .enumerate()
        .map(|(k, e)| if k % 2 == 0 { *e } else { -*e })
        .sum();
    if fault == Fault::FlipPulseSign && !eps_y.is_empty() {
        eps_y[0] = -eps_y[0];
    }
    let r1 = frame.eps1(&eps_y);
    let z = on_system(params, &sigma_z());
    let coef = I * alternating;
    let r = frame.ideal();
    let ideal_residual = max_abs(&(&r1 - &r * &z * coef));
    let r0 = frame.eps0(errors);
    let eps0_residual = max_abs(&(&r1 - &r0 * &z * coef));
    Ok(Eps1Report {
        ideal_residual,
        eps0_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRow {
    pub xi: f64,
    pub exact: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    /// `|s_ε − (s_ε0 + s_ε1 + s_ε2)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
    /// `residual[i] / residual[i+1]` for consecutive ξ.
    pub ratios: Vec<f64>,
    /// `q(T)` of the ideal sequence; the ξ³ remainder is proportional to it.
    pub q_ideal: f64,
}

/// Second-order expansion of the signal along `eps_y = ξ · direction`.
pub fn check_expansion(
    params: &ModelParams,
    timeline: &Timeline,
    direction: &[f64],
    xi_list: &[f64],
    env: &EnvInit,
) -> Result<ExpansionReport> {
    let frame = PulseFrame::new(params, timeline)?;
    if direction.len() != frame.pulse_count() {
        return Err(Error::ErrorCountMismatch {
            expected: frame.pulse_count(),
            actual: direction.len(),
        });
    }
    let el = |a: &Mat, b: &Mat| sigma_x_element(params, a, b, env).map(|z| z.re);
    let r = frame.ideal();
    let q_ideal = sigma_x_element(params, &r, &r, env)?.im;
    let mut rows = Vec::with_capacity(xi_list.len());
    for &xi in xi_list {
        let eps_y: Vec<f64> = direction.iter().map(|d| xi * d).collect();
        let errors = eps_y
            .iter()
            .map(|&y| PulseError::new(y, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let exact_op = frame.noisy(&errors);
        let r0 = frame.eps0(&errors);
        let r1 = frame.eps1(&eps_y);
        let r2 = frame.eps2(&eps_y);
        let exact = el(&exact_op, &exact_op)?;
        let s0 = el(&r0, &r0)?;
        let s1 = el(&r1, &r0)? + el(&r0, &r1)?;
        let s2 = el(&r1, &r1)? + el(&r0, &r2)? + el(&r2, &r0)?;
        rows.push(ExpansionRow {
            xi,
            exact,
            s0,
            s1,
            s2,
            residual: (exact - (s0 + s1 + s2)).abs(),
        });
    }
    let ratios = rows
        .windows(2)
        .map(|w| w[0].residual / w[1].residual)
        .collect();
    Ok(ExpansionReport {
        rows,
        ratios,
        q_ideal,
    })
}

/// Ensemble RMS of `‖R_ε2‖/‖R_ε0‖` divided by the typical size `ξ²n/2`.
pub fn eps2_magnitude_ratio(
    params: &ModelParams,
    timeline: &Timeline,
    xi: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let frame = PulseFrame::new(params, timeline)?;
    let n = frame.pulse_count();
    let r = frame.ideal();
    let norm_r = max_abs(&r);
    let mut g = crate::noise::GaussianStream::new(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let eps_y: Vec<f64> = (0..n).map(|_| xi * g.next_standard()).collect();
        let eps_x: f64 = eps_y.iter().map(|e| (1.0 - e * e).sqrt()).product();
        let r2 = frame.eps2_recursive(&eps_y);
        let ratio = max_abs(&r2) / (eps_x * norm_r);
        acc += ratio * ratio;
    }
    Ok((acc / draws as f64).sqrt() / (0.5 * xi * xi * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub points: usize,
    /// Largest `s² + q² − 1`.
    pub max_modulus_excess: f64,
    /// Largest `|q| − √(1 − s²)`.
    pub max_q_excess: f64,
    /// Smallest `√(1 − s²) − |q|`, the recorded margin.
    pub min_margin: f64,
}

/// Signal bounds over ideal traces of every schedule and env state.
pub fn check_q_bound(
    params: &ModelParams,
    schedules: &[PulseSchedule],
    envs: &[EnvInit],
) -> Result<BoundReport> {
    let mut rep = BoundReport {
        points: 0,
        max_modulus_excess: f64::NEG_INFINITY,
        max_q_excess: f64::NEG_INFINITY,
        min_margin: f64::INFINITY,
    };
    for sched in schedules {
        for env in envs {
            let errs = vec![PulseError::IDEAL; sched.len()];
            for p in trace_run(params, sched, &errs, env)? {
                rep.points += 1;
                rep.max_modulus_excess = rep.max_modulus_excess.max(p.modulus_excess());
                rep.max_q_excess = rep.max_q_excess.max(p.q_bound_excess());
                rep.min_margin = rep.min_margin.min(-p.q_bound_excess());
            }
        }
    }
    Ok(rep)
}

/// A randomized small instance for cross-checks.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub params: ModelParams,
    pub schedule: PulseSchedule,
    pub errors: Vec<PulseError>,
    pub env: EnvInit,
}

impl RandomCase {
    pub fn timeline(&self) -> Timeline {
        build_timeline(&self.params, &self.schedule).expect("generated schedule is valid")
    }
}

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<C> {
    let mut v: Vec<C> = (0..len)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Random environment state with a generic rotator vector.
pub fn random_env(rng: &mut ChaCha8Rng, dim: usize) -> EnvInit {
    let a = random_unit(rng, 2);
    EnvInit::new([a[0], a[1]], RotatorInit::Custom(random_unit(rng, dim)))
}

/// Random parameters, schedule (1..=max_pulses pulses), errors and env state.
pub fn random_case(
    rng: &mut ChaCha8Rng,
    dim: usize,
    max_pulses: usize,
    xi: f64,
    axes: ErrorAxes,
) -> RandomCase {
    let params = make_params(
        rng.gen_range(0.0..2000.0),
        rng.gen_range(0.0..200.0),
        rng.gen_range(0.0..1500.0),
        rng.gen_range(0.5..1000.0),
        dim,
        rng.gen_range(1..=4),
    )
    .expect("sampled parameters are valid");
    let n = rng.gen_range(1..=max_pulses);
    let schedule = match rng.gen_range(0..4) {
        0 => PulseSchedule::generate(Protocol::Udd, n),
        1 => PulseSchedule::generate(Protocol::Pdd, n),
        2 => PulseSchedule::generate(Protocol::Cpmg, n),
        _ => {
            let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect();
            f.sort_by(f64::total_cmp);
            f.dedup();
            PulseSchedule::custom(f)
        }
    }
    .expect("generated schedule is valid");
    let errors = (0..schedule.len())
        .map(|_| {
            let y = xi * rng.gen_range(-1.0..1.0);
            let z = match axes {
                ErrorAxes::YOnly => 0.0,
                ErrorAxes::YAndZ => xi * rng.gen_range(-1.0..1.0),
            };
            PulseError::new(y, z).expect("small errors")
        })
        .collect();
    let env = random_env(rng, dim);
    RandomCase {
        params,
        schedule,
        errors,
        env,
    }
}

/// `|⟨dense|split⟩|²` for both S initial states of a case.
pub fn split_vs_dense_fidelity(case: &RandomCase) -> Result<f64> {
    let timeline = case.timeline();
    let dense = dense_evolution(&case.params, &timeline, &case.errors)?;
    let evo = Evolution::new(&case.params, timeline);
    let mut ws = evo.workspace();
    let mut worst = f64::INFINITY;
    for s in [Spin::Up, Spin::Down] {
        let init = JointState::product(&case.params, s, &case.env)?;
        let want = dense.apply(&init);
        let mut got = [init];
        evo.run(&mut got, &case.errors, &mut ws, |_, _, _| {})?;
        worst = worst.min(want.fidelity(&got[0])?);
    }
    Ok(worst)
}

/// Depth of [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// `N = 8`.
    Fast,
    /// `N = 8` and `N = 16`, more randomized cases.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    /// Measured quantity (a residual, a ratio, a fidelity defect).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            detail,
        }
    }
}

/// Tolerances of the verification suite.
pub mod tol {
    pub const IDENTITY: f64 = 1e-12;
    pub const UNITARITY: f64 = 1e-10;
    pub const FIDELITY_DEFECT: f64 = 1e-10;
    pub const BOUND: f64 = 1e-10;
    /// Allowed relative deviation of the ξ³ halving ratio from 8.
    pub const CUBIC_RATIO: f64 = 0.2;
    /// `R_ε2` typical size within this factor of `ξ²n/2`.
    pub const EPS2_FACTOR: f64 = 3.0;
}

/// Parameters, schedule and direction used by the expansion order check.
///
/// The sequence is deliberately poor so that `q(T)` is not small: the ξ³
/// remainder is proportional to `q(T)`.
pub fn expansion_setup() -> (ModelParams, Timeline, Vec<f64>) {
    let params = make_params(300.0, 400.0, 200.0, 8.0, 8, 2).expect("valid");
    let sched = PulseSchedule::custom(vec![0.05, 0.5, 0.6, 0.65]).expect("valid");
    let timeline = build_timeline(&params, &sched).expect("valid");
    (params, timeline, vec![0.7, -1.1, 0.4, 0.9])
}

/// Runs every oracle check. `fault` injects a known defect.
pub fn run_suite(level: Level, fault: Fault) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let (dims, cases): (&[usize], usize) = match level {
        Level::Fast => (&[8], 50),
        Level::Full => (&[8, 16], 100),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0dd5);

    // eps0 / eps1 operator identities at N = 8
    let (mut e0_op, mut e0_sig, mut e1, mut e1_var, mut e1_var_tol) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut worst_slack = f64::INFINITY;
    for _ in 0..cases {
        let case = random_case(&mut rng, 8, 6, 0.05, ErrorAxes::YAndZ);
        let tl = case.timeline();
        let rep = check_eps0_identity(&case.params, &tl, &case.errors, &case.env)?;
        e0_op = e0_op.max(rep.operator_residual);
        e0_sig = e0_sig.max(rep.signal_residual);

        let y_errors: Vec<PulseError> = case
            .errors
            .iter()
            .map(|e| PulseError::new(e.eps_y(), 0.0))
            .collect::<Result<_>>()?;
        let rep1 = check_eps1_identity(&case.params, &tl, &y_errors, fault)?;
        e1 = e1.max(rep1.ideal_residual);
        let xi2 = y_errors.iter().map(|e| e.eps_y().powi(2)).fold(0.0, f64::max);
        let tol_var = 2.0 * y_errors.len() as f64 * xi2;
        if tol_var - rep1.eps0_residual < worst_slack {
            worst_slack = tol_var - rep1.eps0_residual;
            e1_var = rep1.eps0_residual;
            e1_var_tol = tol_var;
        }
    }
    out.push(CheckOutcome::at_most(
        "eps0_identity_operator",
        e0_op,
        tol::IDENTITY,
        format!("{cases} random cases, N=8"),
    ));
    out.push(CheckOutcome::at_most(
        "eps0_identity_signal",
        e0_sig,
        tol::IDENTITY,
        format!("{cases} random cases, N=8"),
    ));
    out.push(CheckOutcome::at_most(
        "eps1_identity",
        e1,
        tol::IDENTITY,
        format!("{cases} random cases, N=8, ideal-R form"),
    ));
    out.push(CheckOutcome::at_most(
        "eps1_identity_eps0_form",
        e1_var,
        e1_var_tol,
        "tightest case; tolerance 2·n·max ε_y²".into(),
    ));

    // second-order expansion: remainder ~ ξ³
    let (params, timeline, dir) = expansion_setup();
    let env = EnvInit::default();
    let rep = check_expansion(&params, &timeline, &dir, &[4e-2, 2e-2, 1e-2], &env)?;
    let worst_ratio = rep
        .ratios
        .iter()
        .map(|r| (r / 8.0 - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(CheckOutcome::at_most(
        "expansion_cubic_remainder",
        worst_ratio,
        tol::CUBIC_RATIO,
        format!("halving ratios {:?}, q(T) = {:.3e}", rep.ratios, rep.q_ideal),
    ));
    let zero = check_expansion(&params, &timeline, &dir, &[0.0], &env)?;
    out.push(CheckOutcome::at_most(
        "expansion_zero_xi",
        zero.rows[0].residual,
        tol::IDENTITY,
        "xi = 0".into(),
    ));

    // R_ε2 typical size vs ξ²n/2
    let sched = PulseSchedule::generate(Protocol::Udd, 6)?;
    let p8 = make_params(1.5e3, 100.0, 1e3, 1e3, 8, 2)?;
    let tl = build_timeline(&p8, &sched)?;
    let ratio = eps2_magnitude_ratio(&p8, &tl, 0.02, 1000, 17)?;
    out.push(CheckOutcome {
        name: "eps2_typical_size".into(),
        value: ratio,
        tolerance: tol::EPS2_FACTOR,
        passed: ratio <= tol::EPS2_FACTOR && ratio >= 1.0 / tol::EPS2_FACTOR,
        detail: "RMS |R_e2|/|R_e0| over 1000 draws, in units of xi^2 n/2".into(),
    });

    // dense vs split operator, unitarity
    for &dim in dims {
        let mut worst_fid = 0.0f64;
        let mut worst_unitary = 0.0f64;
        for _ in 0..cases {
            let case = random_case(&mut rng, dim, 6, 0.05, ErrorAxes::YAndZ);
            worst_fid = worst_fid.max(1.0 - split_vs_dense_fidelity(&case)?);
            let d = dense_evolution(&case.params, &case.timeline(), &case.errors)?;
            worst_unitary = worst_unitary.max(d.unitarity_defect());
        }
        out.push(CheckOutcome::at_most(
            format!("split_vs_dense_N{dim}"),
            worst_fid,
            tol::FIDELITY_DEFECT,
            format!("1 - fidelity, worst of {cases} cases"),
        ));
        out.push(CheckOutcome::at_most(
            format!("dense_unitarity_N{dim}"),
            worst_unitary,
            tol::UNITARITY,
            format!("max |U^dag U - 1|, {cases} cases"),
        ));
    }

    // bound on q
    let envs: Vec<EnvInit> = (0..4)
        .map(|_| random_env(&mut rng, 8))
        .chain([EnvInit::default()])
        .collect();
    let scheds: Vec<PulseSchedule> = [
        (Protocol::Udd, 1),
        (Protocol::Udd, 5),
        (Protocol::Pdd, 2),
        (Protocol::Pdd, 8),
        (Protocol::Cpmg, 3),
    ]
    .into_iter()
    .map(|(p, n)| PulseSchedule::generate(p, n))
    .collect::<Result<_>>()?;
    let pb = make_params(1.5e3, 100.0, 1e3, 1e3, 8, 6)?;
    let b = check_q_bound(&pb, &scheds, &envs)?;
    out.push(CheckOutcome::at_most(
        "signal_modulus_bound",
        b.max_modulus_excess,
        tol::BOUND,
        format!("{} points", b.points),
    ));
    out.push(CheckOutcome::at_most(
        "q_bound",
        b.max_q_excess,
        tol::BOUND,
        format!("{} points, min margin {:.3e}", b.points, b.min_margin),
    ));
    Ok(out)
}

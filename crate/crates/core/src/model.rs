//! Physical parameters, the joint S ⊗ A ⊗ rotator state, and basis conventions.
//!
//! Basis layout of a [`JointState`] of rotator dimension `N`:
//! index `(2·s + a)·N + (l + N/2)`, where `s` and `a` are the σ_z indices of
//! the system qubit and the ancilla qubit (0 = ↑, 1 = ↓) and
//! `l ∈ {−N/2, …, N/2−1}` is the rotator angular momentum.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Stochasticity above which the kicked rotator is taken to be chaotic.
pub const CHAOS_THRESHOLD: f64 = 6.0;

const ENV_NORM_TOL: f64 = 1e-12;

/// Hamiltonian constants and the discretization of the rotator.
///
/// Units have ħ = 1. The kick period is tied to the rotator dimension through
/// the effective Planck constant, `T0 = 2π/N`, and the quantum kick strength is
/// `k = K/T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    omega_a: f64,
    g: f64,
    lambda: f64,
    stochasticity: f64,
    dim: usize,
    periods: usize,
    kick_period: f64,
    kick_strength: f64,
    horizon: f64,
}

impl ModelParams {
    /// Validates the inputs and computes the derived quantities.
    pub fn new(
        omega_a: f64,
        g: f64,
        lambda: f64,
        stochasticity: f64,
        dim: usize,
        periods: usize,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega_a", omega_a),
            ("g", g),
            ("lambda", lambda),
            ("K", stochasticity),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if dim < 8 || !dim.is_power_of_two() {
            return Err(invalid(
                "N",
                format!("rotator dimension must be a power of two >= 8, got {dim}"),
            ));
        }
        if periods == 0 {
            return Err(invalid("periods", "need at least one kick period"));
        }
        let kick_period = TAU / dim as f64;
        Ok(Self {
            omega_a,
            g,
            lambda,
            stochasticity,
            dim,
            periods,
            kick_period,
            kick_strength: stochasticity / kick_period,
            horizon: periods as f64 * kick_period,
        })
    }

    /// Parameters of the published kicked-rotator runs:
    /// ω_A = 1.5e3, g = 100, λ = 1e3, K = 1e3, N = 2¹², T = 50·T0.
    pub fn reference() -> Self {
        Self::new(1.5e3, 100.0, 1e3, 1e3, 4096, 50).expect("reference parameters are valid")
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Classical stochasticity parameter `K = k·T0`.
    pub fn stochasticity(&self) -> f64 {
        self.stochasticity
    }

    /// Rotator Hilbert-space dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Kick period `T0 = 2π/N`.
    pub fn kick_period(&self) -> f64 {
        self.kick_period
    }

    /// Quantum kick strength `k = K/T0`.
    pub fn kick_strength(&self) -> f64 {
        self.kick_strength
    }

    /// Total evolution time `T = periods·T0`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Dimension of the joint state, `4N`.
    pub fn joint_dim(&self) -> usize {
        4 * self.dim
    }

    pub fn is_chaotic(&self) -> bool {
        self.stochasticity > CHAOS_THRESHOLD
    }

    /// Non-fatal diagnostics about the parameter choice.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.is_chaotic() {
            out.push(format!(
                "K = {} is below the chaos threshold {CHAOS_THRESHOLD}; the rotator is not in the chaotic regime",
                self.stochasticity
            ));
        }
        out
    }

    /// Position grid point `θ_m = 2πm/N`.
    pub fn theta(&self, m: usize) -> f64 {
        TAU * m as f64 / self.dim as f64
    }

    /// Angular momentum carried by storage index `j`.
    pub fn momentum(&self, j: usize) -> i64 {
        j as i64 - (self.dim / 2) as i64
    }
}

/// Convenience constructor mirroring [`ModelParams::new`].
pub fn make_params(
    omega_a: f64,
    g: f64,
    lambda: f64,
    stochasticity: f64,
    dim: usize,
    periods: usize,
) -> Result<ModelParams> {
    ModelParams::new(omega_a, g, lambda, stochasticity, dim, periods)
}

/// σ_z eigenstates of a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// σ_z eigenvalue.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Initial state of the rotator.
#[derive(Debug, Clone, PartialEq)]
pub enum RotatorInit {
    /// Angular-momentum eigenstate `|l0⟩`, `l0 ∈ [−N/2, N/2)`.
    Momentum(i64),
    /// Position eigenstate `|θ_m⟩`: uniform modulus over all momenta.
    Position(usize),
    /// Explicit amplitudes in the momentum basis, storage order `l + N/2`.
    Custom(Vec<Complex64>),
}

/// Pure product initial state of the environment (qubit A ⊗ rotator).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvInit {
    pub a_state: [Complex64; 2],
    pub rotator: RotatorInit,
}

impl Default for EnvInit {
    /// A in the σ_x = +1 eigenstate, rotator at zero momentum.
    fn default() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            a_state: [h, h],
            rotator: RotatorInit::Momentum(0),
        }
    }
}

impl EnvInit {
    pub fn new(a_state: [Complex64; 2], rotator: RotatorInit) -> Self {
        Self { a_state, rotator }
    }

    /// One-line description for run manifests.
    pub fn describe(&self) -> String {
        let [u, d] = self.a_state;
        let rot = match &self.rotator {
            RotatorInit::Momentum(l) => format!("momentum eigenstate l0={l}"),
            RotatorInit::Position(m) => format!("position eigenstate m={m}"),
            RotatorInit::Custom(v) => format!("custom vector (len {})", v.len()),
        };
        format!(
            "A=({:+.17e}{:+.17e}i)|up> + ({:+.17e}{:+.17e}i)|down>; rotator {rot}",
            u.re, u.im, d.re, d.im
        )
    }

    /// Rotator amplitudes in the momentum basis, validated against `params`.
    pub fn rotator_amplitudes(&self, params: &ModelParams) -> Result<Vec<Complex64>> {
        let n = params.dim();
        let half = (n / 2) as i64;
        match &self.rotator {
            RotatorInit::Momentum(l0) => {
                if *l0 < -half || *l0 >= half {
                    return Err(invalid(
                        "rotator",
                        format!("momentum {l0} outside [{}, {})", -half, half),
                    ));
                }
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                v[(l0 + half) as usize] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            RotatorInit::Position(m) => {
                if *m >= n {
                    return Err(invalid("rotator", format!("position index {m} >= N = {n}")));
                }
                let theta = params.theta(*m);
                let amp = 1.0 / (n as f64).sqrt();
                Ok((0..n)
                    .map(|j| {
                        let phase = (-(params.momentum(j) as f64) * theta).rem_euclid(TAU);
                        Complex64::from_polar(amp, phase)
                    })
                    .collect())
            }
            RotatorInit::Custom(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: v.len(),
                    });
                }
                check_normalized(v)?;
                Ok(v.clone())
            }
        }
    }
}

fn check_normalized(v: &[Complex64]) -> Result<()> {
    let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > ENV_NORM_TOL || !norm_sqr.is_finite() {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(())
}

/// Pure state of S ⊗ A ⊗ rotator.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dim: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    /// Wraps raw amplitudes. Length must be `4·dim`; normalization is not checked.
    pub fn from_amplitudes(dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 4 * dim {
            return Err(Error::DimensionMismatch {
                expected: 4 * dim,
                actual: amps.len(),
            });
        }
        Ok(Self { dim, amps })
    }

    /// Product state `|s⟩ ⊗ |a⟩ ⊗ |rotator⟩`.
    pub fn product(params: &ModelParams, s: Spin, env: &EnvInit) -> Result<Self> {
        check_normalized(&env.a_state)?;
        let rot = env.rotator_amplitudes(params)?;
        let n = params.dim();
        let mut amps = vec![Complex64::new(0.0, 0.0); 4 * n];
        for (a, ca) in env.a_state.iter().enumerate() {
            let off = (2 * s.index() + a) * n;
            for (dst, r) in amps[off..off + n].iter_mut().zip(&rot) {
                *dst = ca * r;
            }
        }
        Ok(Self { dim: n, amps })
    }

    /// Rotator dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Flat index of `(s, a, l)`.
    pub fn index(&self, s: Spin, a: Spin, l: i64) -> usize {
        let j = (l + (self.dim / 2) as i64) as usize;
        (2 * s.index() + a.index()) * self.dim + j
    }

    pub fn get(&self, s: Spin, a: Spin, l: i64) -> Complex64 {
        self.amps[self.index(s, a, l)]
    }

    /// Rotator block for fixed `(s, a)`, in momentum storage order.
    pub fn block(&self, s: Spin, a: Spin) -> &[Complex64] {
        let off = (2 * s.index() + a.index()) * self.dim;
        &self.amps[off..off + self.dim]
    }

    /// Both ancilla blocks of the S-sector `s`, i.e. `2N` contiguous amplitudes.
    pub fn sector(&self, s: Spin) -> &[Complex64] {
        let off = 2 * s.index() * self.dim;
        &self.amps[off..off + 2 * self.dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Total probability in the S-sector `s`.
    pub fn sector_population(&self, s: Spin) -> f64 {
        self.sector(s).iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                actual: other.amps.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|² for normalized states.
    pub fn fidelity(&self, other: &JointState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// Product state `|s⟩ ⊗ env`; see [`JointState::product`].
pub fn make_state(params: &ModelParams, s: Spin, env: &EnvInit) -> Result<JointState> {
    JointState::product(params, s, env)
}

/// Reduces a phase into `[0, 2π)` before it is exponentiated.
#[inline]
pub(crate) fn cis_reduced(phase: f64) -> Complex64 {
    let p = phase.rem_euclid(TAU);
    let (s, c) = p.sin_cos();
    Complex64::new(c, s)
}

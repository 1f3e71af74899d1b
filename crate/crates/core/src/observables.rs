//! The coherence signal `s(t) + i q(t) = ⟨↓|R†(t) σ_x^S R(t)|↑⟩`, evaluated in
//! the environment state `|χ⟩` by evolving `|↑⟩⊗|χ⟩` and `|↓⟩⊗|χ⟩` side by side.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{make_state, EnvInit, JointState, ModelParams, Spin};
use crate::noise::PulseError;
use crate::propagator::{Checkpoint, Evolution, Workspace};
use crate::sequences::{build_timeline, EventKind, PulseSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPoint {
    pub t: f64,
    pub s: f64,
    pub q: f64,
}

impl SignalPoint {
    /// Amount by which `|s + iq| ≤ 1` is violated (≤ 0 when it holds).
    pub fn modulus_excess(&self) -> f64 {
        self.s * self.s + self.q * self.q - 1.0
    }

    /// Amount by which `|q| ≤ √(1 − s²)` is violated (≤ 0 when it holds).
    pub fn q_bound_excess(&self) -> f64 {
        self.q.abs() - (1.0 - self.s * self.s).max(0.0).sqrt()
    }
}

/// `(s, q)` from the two evolved trajectories `R|↑χ⟩` and `R|↓χ⟩`.
pub fn signal(phi_up: &JointState, phi_down: &JointState) -> Result<(f64, f64)> {
    if phi_up.amplitudes().len() != phi_down.amplitudes().len() {
        return Err(Error::DimensionMismatch {
            expected: phi_up.amplitudes().len(),
            actual: phi_down.amplitudes().len(),
        });
    }
    let z = sigma_x_element(phi_up, phi_down);
    Ok((z.re, z.im))
}

fn sigma_x_element(phi_up: &JointState, phi_down: &JointState) -> Complex64 {
    let cross = |bra: &[Complex64], ket: &[Complex64]| -> Complex64 {
        bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
    };
    cross(phi_down.sector(Spin::Up), phi_up.sector(Spin::Down))
        + cross(phi_down.sector(Spin::Down), phi_up.sector(Spin::Up))
}

fn point(t: f64, pair: &[JointState]) -> SignalPoint {
    let z = sigma_x_element(&pair[0], &pair[1]);
    SignalPoint { t, s: z.re, q: z.im }
}

/// Which checkpoints of an evolution become [`SignalPoint`]s.
///
/// The initial point at `t = 0` and the final point at `t = T` are always emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    /// Every `stride`-th checkpoint.
    Every(usize),
    /// Observation marks of the timeline only.
    Marks,
    /// Only the endpoints.
    Final,
}

/// Initial pair `(|↑⟩⊗|χ⟩, |↓⟩⊗|χ⟩)`.
pub fn initial_pair(params: &ModelParams, env: &EnvInit) -> Result<[JointState; 2]> {
    Ok([
        make_state(params, Spin::Up, env)?,
        make_state(params, Spin::Down, env)?,
    ])
}

/// Runs the pair through a prepared evolution and records the signal.
pub fn trace_evolution(
    evo: &Evolution,
    initial: &[JointState; 2],
    errors: &[PulseError],
    emit: Emit,
    ws: &mut Workspace,
) -> Result<Vec<SignalPoint>> {
    let mut pair = initial.clone();
    let mut points = vec![point(0.0, &pair)];
    let stride = match emit {
        Emit::Every(s) => s.max(1),
        _ => usize::MAX,
    };
    let mut count = 0usize;
    let mut last_emitted = false;
    evo.run(&mut pair, errors, ws, |cp, t, states| {
        count += 1;
        let take = match (emit, cp) {
            (Emit::Every(_), _) => count % stride == 0,
            (Emit::Marks, Checkpoint::Event(_, EventKind::Mark)) => true,
            _ => false,
        };
        if take {
            points.push(point(t, states));
        }
        last_emitted = take;
    })?;
    if !last_emitted {
        points.push(point(evo.timeline().horizon(), &pair));
    }
    Ok(points)
}

/// Ideal or noisy signal after every event, with one point per checkpoint.
pub fn trace_run(
    params: &ModelParams,
    schedule: &PulseSchedule,
    errors: &[PulseError],
    env: &EnvInit,
) -> Result<Vec<SignalPoint>> {
    let evo = Evolution::new(params, build_timeline(params, schedule)?);
    let mut ws = evo.workspace();
    trace_evolution(&evo, &initial_pair(params, env)?, errors, Emit::Every(1), &mut ws)
}

/// Largest violation of the two signal bounds over `points` (≤ 0 means both hold).
pub fn max_bound_excess(points: &[SignalPoint]) -> f64 {
    points
        .iter()
        .map(|p| p.modulus_excess().max(p.q_bound_excess()))
        .fold(f64::NEG_INFINITY, f64::max)
}

//! Exact unitary evolution of a [`JointState`].
//!
//! Between kicks the Hamiltonian is `ω_A σ_x^A + g σ_z^S σ_z^A + p²/2`. The
//! qubit part and the kinetic part act on different tensor factors, so a free
//! segment of length τ is the product of a 4×4 block (diagonal in S) and the
//! momentum phase `exp(−iτl²/2)`. Kicks `exp(−i(k + λσ_z^A) cos θ)` are
//! diagonal in position and applied through a unitary DFT of each rotator
//! block. Pulses mix the two S-sectors.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{cis_reduced, JointState, ModelParams, Spin};
use crate::noise::PulseError;
use crate::sequences::{EventKind, Timeline};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// `exp(−iτ(ω_A σ_x^A + g σ_z^S σ_z^A))`, stored per S-sector as a 2×2 matrix on A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBlock {
    sectors: [[[C; 2]; 2]; 2],
}

impl QubitBlock {
    pub fn identity() -> Self {
        let one = C::new(1.0, 0.0);
        let id = [[one, ZERO], [ZERO, one]];
        Self { sectors: [id, id] }
    }

    /// 2×2 action on A within the S-sector `s`.
    pub fn sector(&self, s: Spin) -> [[C; 2]; 2] {
        self.sectors[s.index()]
    }

    /// Full 4×4 matrix on S ⊗ A, index `2s + a`.
    pub fn matrix(&self) -> [[C; 4]; 4] {
        let mut m = [[ZERO; 4]; 4];
        for s in 0..2 {
            for r in 0..2 {
                for c in 0..2 {
                    m[2 * s + r][2 * s + c] = self.sectors[s][r][c];
                }
            }
        }
        m
    }
}

/// Closed form `cos(Ωτ) I − i sin(Ωτ) (ω_A σ_x ± g σ_z)/Ω` with `Ω = √(ω_A² + g²)`.
pub fn qubit_block(tau: f64, params: &ModelParams) -> QubitBlock {
    let (wa, g) = (params.omega_a(), params.g());
    let omega = wa.hypot(g);
    if tau == 0.0 || omega == 0.0 {
        return QubitBlock::identity();
    }
    let (sin, cos) = (omega * tau).sin_cos();
    let f = sin / omega;
    let mut sectors = [[[ZERO; 2]; 2]; 2];
    for s in [Spin::Up, Spin::Down] {
        let gz = s.sign() * g;
        sectors[s.index()] = [
            [C::new(cos, -f * gz), C::new(0.0, -f * wa)],
            [C::new(0.0, -f * wa), C::new(cos, f * gz)],
        ];
    }
    QubitBlock { sectors }
}

/// Kinetic phases `exp(−iτl²/2)` indexed by `|l|`, `0 ..= N/2`.
fn kinetic_table(tau: f64, dim: usize) -> Vec<C> {
    (0..=dim / 2)
        .map(|l| {
            let l = l as f64;
            cis_reduced(-0.5 * tau * l * l)
        })
        .collect()
}

/// Precomputed free evolution over a fixed duration.
#[derive(Debug, Clone)]
pub struct FreeOp {
    tau: f64,
    block: QubitBlock,
    kinetic: Vec<C>,
}

impl FreeOp {
    pub fn new(tau: f64, params: &ModelParams) -> Self {
        Self {
            tau,
            block: qubit_block(tau, params),
            kinetic: kinetic_table(tau, params.dim()),
        }
    }

    pub fn duration(&self) -> f64 {
        self.tau
    }

    pub fn apply(&self, state: &mut JointState) {
        let n = state.dim();
        let half = n / 2;
        let kin = &self.kinetic;
        let amps = state.amplitudes_mut();
        for s in [Spin::Up, Spin::Down] {
            let [[b00, b01], [b10, b11]] = self.block.sector(s);
            let off = 2 * s.index() * n;
            let (up, down) = amps[off..off + 2 * n].split_at_mut(n);
            for (j, (x, y)) in up.iter_mut().zip(down.iter_mut()).enumerate() {
                let k = kin[j.abs_diff(half)];
                let (u, d) = (*x, *y);
                *x = (b00 * u + b01 * d) * k;
                *y = (b10 * u + b11 * d) * k;
            }
        }
    }
}

/// Applies free evolution of duration `tau`.
pub fn free_segment(state: &mut JointState, tau: f64, params: &ModelParams) {
    if tau != 0.0 {
        FreeOp::new(tau, params).apply(state);
    }
}

/// Applies the pulse `ε_x σ_x + ε_y σ_y + ε_z σ_z` to the S qubit.
pub fn apply_pulse(state: &mut JointState, err: &PulseError) {
    let n = state.dim();
    let (up, down) = state.amplitudes_mut().split_at_mut(2 * n);
    if err.is_ideal() {
        up.swap_with_slice(down);
        return;
    }
    let [[p00, p01], [p10, p11]] = err.matrix();
    for (x, y) in up.iter_mut().zip(down.iter_mut()) {
        let (u, d) = (*x, *y);
        *x = p00 * u + p01 * d;
        *y = p10 * u + p11 * d;
    }
}

/// Scratch buffer for the in-place FFTs of one trajectory.
#[derive(Debug, Clone)]
pub struct Workspace {
    scratch: Vec<C>,
}

/// Per-parameter-set machinery: FFT plans and kick phases.
///
/// Immutable after construction; share one instance across trajectories and
/// give each trajectory its own [`Workspace`].
#[derive(Clone)]
pub struct Propagator {
    params: ModelParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // exp(−i(k ± λ) cos θ_m)/N for a = ↑, ↓
    kick: [Vec<C>; 2],
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl Propagator {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.dim();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let norm = 1.0 / n as f64;
        let kick = [Spin::Up, Spin::Down].map(|a| {
            let strength = params.kick_strength() + params.lambda() * a.sign();
            (0..n)
                .map(|m| cis_reduced(-strength * params.theta(m).cos()) * norm)
                .collect()
        });
        Self {
            params: params.clone(),
            forward,
            inverse,
            kick,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn workspace(&self) -> Workspace {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        Workspace {
            scratch: vec![ZERO; len],
        }
    }

    /// One kick. Momentum → position is the inverse DFT; the `l + N/2` storage
    /// offset contributes a factor `(−1)^m` that cancels on the way back.
    pub fn apply_kick(&self, state: &mut JointState, ws: &mut Workspace) {
        let n = self.params.dim();
        for (b, block) in state.amplitudes_mut().chunks_exact_mut(n).enumerate() {
            let phases = &self.kick[b % 2];
            self.inverse.process_with_scratch(block, &mut ws.scratch);
            for (z, p) in block.iter_mut().zip(phases) {
                *z *= p;
            }
            self.forward.process_with_scratch(block, &mut ws.scratch);
        }
    }
}

/// Applies one kick; plans the FFT on every call; prefer [`Propagator`] in loops.
pub fn apply_kick(state: &mut JointState, params: &ModelParams) {
    let prop = Propagator::new(params);
    let mut ws = prop.workspace();
    prop.apply_kick(state, &mut ws);
}

/// Where an observer callback fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checkpoint {
    /// Right after the event at this timeline index.
    Event(usize, EventKind),
    /// End of the trailing free segment at `t = T`.
    End,
}

/// A timeline bound to a parameter set, with every free segment precomputed.
#[derive(Debug, Clone)]
pub struct Evolution {
    propagator: Propagator,
    timeline: Timeline,
    ops: Vec<FreeOp>,
    // index into `ops` for the segment before each event
    before: Vec<Option<usize>>,
    tail: Option<usize>,
}

impl Evolution {
    pub fn new(params: &ModelParams, timeline: Timeline) -> Self {
        let mut ops = Vec::new();
        let mut seen: HashMap<u64, usize> = HashMap::new();
        let mut lookup = |tau: f64| -> Option<usize> {
            if tau <= 0.0 {
                return None;
            }
            Some(*seen.entry(tau.to_bits()).or_insert_with(|| {
                ops.push(FreeOp::new(tau, params));
                ops.len() - 1
            }))
        };
        let before = timeline.durations().iter().map(|&d| lookup(d)).collect();
        let tail = lookup(timeline.tail());
        Self {
            propagator: Propagator::new(params),
            timeline,
            ops,
            before,
            tail,
        }
    }

    pub fn params(&self) -> &ModelParams {
        self.propagator.params()
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn workspace(&self) -> Workspace {
        self.propagator.workspace()
    }

    /// Walks several trajectories through the timeline in lockstep, all with
    /// the same pulse errors. `observer` sees every state after each event and
    /// once more at `T` if a trailing free segment exists.
    pub fn run<F>(
        &self,
        states: &mut [JointState],
        errors: &[PulseError],
        ws: &mut Workspace,
        mut observer: F,
    ) -> Result<()>
    where
        F: FnMut(Checkpoint, f64, &[JointState]),
    {
        let expected = self.timeline.pulse_count();
        if errors.len() != expected {
            return Err(Error::ErrorCountMismatch {
                expected,
                actual: errors.len(),
            });
        }
        let joint = self.params().joint_dim();
        for st in states.iter() {
            if st.amplitudes().len() != joint {
                return Err(Error::DimensionMismatch {
                    expected: joint,
                    actual: st.amplitudes().len(),
                });
            }
        }
        for (i, event) in self.timeline.events().iter().enumerate() {
            if let Some(op) = self.before[i] {
                for st in states.iter_mut() {
                    self.ops[op].apply(st);
                }
            }
            match event.kind {
                EventKind::Kick => {
                    for st in states.iter_mut() {
                        self.propagator.apply_kick(st, ws);
                    }
                }
                EventKind::Pulse(p) => {
                    for st in states.iter_mut() {
                        apply_pulse(st, &errors[p]);
                    }
                }
                EventKind::Mark => {}
            }
            observer(Checkpoint::Event(i, event.kind), event.time, states);
        }
        if let Some(op) = self.tail {
            for st in states.iter_mut() {
                self.ops[op].apply(st);
            }
            observer(Checkpoint::End, self.timeline.horizon(), states);
        }
        Ok(())
    }
}

/// Evolves one state through `timeline`, calling `observer(t, state)` after
/// every event and at `T`.
pub fn evolve<F>(
    state: &mut JointState,
    params: &ModelParams,
    timeline: &Timeline,
    errors: &[PulseError],
    mut observer: F,
) -> Result<()>
where
    F: FnMut(f64, &JointState),
{
    let evo = Evolution::new(params, timeline.clone());
    let mut ws = evo.workspace();
    evo.run(
        std::slice::from_mut(state),
        errors,
        &mut ws,
        |_, t, s| observer(t, &s[0]),
    )
}

//! Dynamical-decoupling robustness under random pulse-direction errors.
//!
//! A system qubit S couples to an ancilla qubit A, which in turn is kicked
//! together with a quantum kicked rotator. Single-axis π-pulse sequences
//! (UDD, periodic bang-bang, CPMG or custom) act on S, and the coherence
//! signal `s(t) = Re⟨↓|R†σ_xR|↑⟩` is tracked under exact split-operator
//! propagation. Monte Carlo drivers and least-squares fits quantify how the
//! signal degrades with the error dispersion ξ and the pulse count n; a dense
//! small-N oracle cross-checks the propagator and the operator identities of
//! the error expansion.

pub mod error;
pub mod experiments;
pub mod model;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod par;
pub mod propagator;
pub mod sequences;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use model::{make_params, make_state, EnvInit, JointState, ModelParams, RotatorInit, Spin};
pub use noise::{sample_errors, ErrorAxes, ErrorModel, PulseError};
pub use observables::{signal, trace_run, SignalPoint};
pub use sequences::{build_timeline, Protocol, PulseSchedule, Timeline};

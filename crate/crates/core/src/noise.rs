//! Seeded Gaussian pulse-direction errors.
//!
//! An imperfect π-pulse about x is `ε_x σ_x + ε_y σ_y + ε_z σ_z` with
//! `ε_x = √(1 − ε_y² − ε_z²)`. The transverse components are drawn
//! independently per pulse from `N(0, ξ²)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Dispersion at which the small-error expansion is no longer trustworthy.
pub const XI_WARN: f64 = 0.25;

/// Direction error of one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseError {
    eps_y: f64,
    eps_z: f64,
}

impl PulseError {
    pub const IDEAL: PulseError = PulseError {
        eps_y: 0.0,
        eps_z: 0.0,
    };

    pub fn new(eps_y: f64, eps_z: f64) -> Result<Self> {
        let t = eps_y * eps_y + eps_z * eps_z;
        if !(t <= 1.0) {
            return Err(Error::PulseOutOfRange(t));
        }
        Ok(Self { eps_y, eps_z })
    }

    pub fn eps_x(&self) -> f64 {
        (1.0 - self.eps_y * self.eps_y - self.eps_z * self.eps_z)
            .max(0.0)
            .sqrt()
    }

    pub fn eps_y(&self) -> f64 {
        self.eps_y
    }

    pub fn eps_z(&self) -> f64 {
        self.eps_z
    }

    pub fn is_ideal(&self) -> bool {
        self.eps_y == 0.0 && self.eps_z == 0.0
    }

    /// Same error with the sign of ε_y flipped.
    pub fn flip_y(self) -> Self {
        Self {
            eps_y: -self.eps_y,
            ..self
        }
    }

    /// The 2×2 pulse operator in the σ_z basis (row-major, ↑ first).
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let ex = self.eps_x();
        [
            [
                Complex64::new(self.eps_z, 0.0),
                Complex64::new(ex, -self.eps_y),
            ],
            [
                Complex64::new(ex, self.eps_y),
                Complex64::new(-self.eps_z, 0.0),
            ],
        ]
    }
}

impl Default for PulseError {
    fn default() -> Self {
        Self::IDEAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorAxes {
    YOnly,
    YAndZ,
}

impl fmt::Display for ErrorAxes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorAxes::YOnly => "y",
            ErrorAxes::YAndZ => "yz",
        })
    }
}

impl FromStr for ErrorAxes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y" | "y_only" | "y-only" => Ok(ErrorAxes::YOnly),
            "yz" | "y_and_z" | "y+z" => Ok(ErrorAxes::YAndZ),
            other => Err(invalid("axes", format!("expected `y` or `yz`, got `{other}`"))),
        }
    }
}

/// Dispersion, active axes and base seed of the pulse errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub xi: f64,
    pub axes: ErrorAxes,
    pub seed: u64,
}

impl ErrorModel {
    pub fn new(xi: f64, axes: ErrorAxes, seed: u64) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(invalid("xi", format!("must be finite and >= 0, got {xi}")));
        }
        Ok(Self { xi, axes, seed })
    }

    pub fn ideal() -> Self {
        Self {
            xi: 0.0,
            axes: ErrorAxes::YOnly,
            seed: 0,
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.xi >= XI_WARN {
            vec![format!(
                "xi = {} is not small; the perturbative error expansion does not apply",
                self.xi
            )]
        } else {
            Vec::new()
        }
    }

    /// Model of the `index`-th independent realization.
    pub fn realization(&self, index: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, index),
            ..*self
        }
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for sub-stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

/// Standard normal deviates by the Marsaglia polar method.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform_open(&mut self) -> f64 {
        // 53 random bits mapped to (-1, 1)
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) / (1u64 << 52) as f64 - 1.0
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = self.uniform_open();
            let v = self.uniform_open();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Draws `n` independent pulse errors; deterministic in `(seed, n, axes, ξ)`.
///
/// Draws with `ε_y² + ε_z² > 1` are discarded and redrawn.
pub fn sample_errors(n: usize, model: &ErrorModel) -> Vec<PulseError> {
    if model.xi == 0.0 {
        return vec![PulseError::IDEAL; n];
    }
    let mut g = GaussianStream::new(model.seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let y = model.xi * g.next_standard();
        let z = match model.axes {
            ErrorAxes::YOnly => 0.0,
            ErrorAxes::YAndZ => model.xi * g.next_standard(),
        };
        if let Ok(e) = PulseError::new(y, z) {
            out.push(e);
        }
    }
    out
}

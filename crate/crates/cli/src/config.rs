use std::fmt;
use std::path::{Path, PathBuf};

use ddrobust::experiments::{large_regime_grid, small_regime_grid, DEFAULT_REPS};
use ddrobust::{
    Complex64, EnvInit, ErrorAxes, ErrorModel, ModelParams, Protocol, PulseSchedule, RotatorInit,
};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<ddrobust::Error> for ConfigError {
    fn from(e: ddrobust::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub omega_a: f64,
    pub g: f64,
    pub lambda: f64,
    /// Classical stochasticity `K`.
    pub stochasticity: f64,
    pub dim: usize,
    pub periods: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::reference();
        Self {
            omega_a: p.omega_a(),
            g: p.g(),
            lambda: p.lambda(),
            stochasticity: p.stochasticity(),
            dim: p.dim(),
            periods: p.periods(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    /// Amplitude of A in `|↑⟩` as `[re, im]`.
    pub a_up: [f64; 2],
    /// Amplitude of A in `|↓⟩` as `[re, im]`.
    pub a_down: [f64; 2],
    /// `momentum` or `position`.
    pub rotator: String,
    /// Momentum `l₀` or position index `m`.
    pub rotator_index: i64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a_up: [h, 0.0],
            a_down: [h, 0.0],
            rotator: "momentum".into(),
            rotator_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub protocol: String,
    pub n: usize,
    /// Custom schedule file, one fraction per line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fractions: Option<PathBuf>,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self {
            protocol: "udd".into(),
            n: 50,
            fractions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub xi: f64,
    /// `y` or `yz`.
    pub axes: String,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            xi: 0.0,
            axes: "yz".into(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub reps: usize,
    /// Keep every `stride`-th point of single-trajectory traces.
    pub stride: usize,
    /// Uniform observation grid size for ensemble and comparison traces.
    pub grid_points: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            reps: DEFAULT_REPS,
            stride: 1,
            grid_points: 200,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit ξ values; overrides `regime`.
    pub xi: Vec<f64>,
    /// `small` or `large`.
    pub regime: String,
    pub count: usize,
    /// Ratio between largest and smallest `ξ√n` of the small-regime grid.
    pub span: f64,
    /// Pulse counts for `sweep-n` and `compare`.
    pub n_list: Vec<usize>,
    /// Protocols for `compare`; the first two are ranked in `crossover.txt`.
    pub protocols: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            xi: Vec::new(),
            regime: "small".into(),
            count: 6,
            span: 10.0,
            n_list: vec![50, 200, 500],
            protocols: vec!["udd".into(), "pdd".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub env: EnvSection,
    pub sequence: SequenceSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub sweep: SweepSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub protocol: Option<String>,
    pub n: Option<usize>,
    pub xi: Option<f64>,
    pub fractions: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| cfg_err(format!("config: {e}")))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(s) = ov.seed {
            self.noise.seed = s;
        }
        if let Some(r) = ov.reps {
            self.run.reps = r;
        }
        if let Some(o) = &ov.out {
            self.run.out = o.clone();
        }
        if let Some(p) = &ov.protocol {
            self.sequence.protocol = p.clone();
        }
        if let Some(n) = ov.n {
            self.sequence.n = n;
        }
        if let Some(x) = ov.xi {
            self.noise.xi = x;
        }
        if let Some(f) = &ov.fractions {
            self.sequence.fractions = Some(f.clone());
            self.sequence.protocol = "custom".into();
        }
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        self.env()?;
        self.error_model()?;
        if self.run.reps == 0 {
            return Err(cfg_err("run.reps must be at least 1"));
        }
        if self.run.stride == 0 {
            return Err(cfg_err("run.stride must be at least 1"));
        }
        if self.run.grid_points == 0 {
            return Err(cfg_err("run.grid_points must be at least 1"));
        }
        let protocol = self.protocol()?;
        if protocol == Protocol::Custom && self.sequence.fractions.is_none() {
            return Err(cfg_err("protocol custom needs sequence.fractions"));
        }
        for p in &self.sweep.protocols {
            if p.parse::<Protocol>()? == Protocol::Custom {
                return Err(cfg_err("sweep.protocols accepts udd, pdd, cpmg"));
            }
        }
        if !matches!(self.sweep.regime.as_str(), "small" | "large") {
            return Err(cfg_err(format!(
                "sweep.regime must be small or large, got {}",
                self.sweep.regime
            )));
        }
        if self.sweep.xi.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(cfg_err("sweep.xi values must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        Ok(ModelParams::new(
            m.omega_a,
            m.g,
            m.lambda,
            m.stochasticity,
            m.dim,
            m.periods,
        )?)
    }

    pub fn env(&self) -> Result<EnvInit, ConfigError> {
        let e = &self.env;
        let a = [
            Complex64::new(e.a_up[0], e.a_up[1]),
            Complex64::new(e.a_down[0], e.a_down[1]),
        ];
        let rotator = match e.rotator.as_str() {
            "momentum" => RotatorInit::Momentum(e.rotator_index),
            "position" => RotatorInit::Position(
                usize::try_from(e.rotator_index)
                    .map_err(|_| cfg_err("env.rotator_index must be >= 0 for position"))?,
            ),
            other => {
                return Err(cfg_err(format!(
                    "env.rotator must be momentum or position, got {other}"
                )))
            }
        };
        let env = EnvInit::new(a, rotator);
        env.rotator_amplitudes(&self.params()?)?;
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(cfg_err(format!("env A state not normalized: {norm}")));
        }
        Ok(env)
    }

    pub fn axes(&self) -> Result<ErrorAxes, ConfigError> {
        Ok(self.noise.axes.parse()?)
    }

    pub fn error_model(&self) -> Result<ErrorModel, ConfigError> {
        Ok(ErrorModel::new(self.noise.xi, self.axes()?, self.noise.seed)?)
    }

    pub fn protocol(&self) -> Result<Protocol, ConfigError> {
        Ok(self.sequence.protocol.parse()?)
    }

    pub fn schedule(&self) -> Result<PulseSchedule, ConfigError> {
        match self.protocol()? {
            Protocol::Custom => {
                let path = self
                    .sequence
                    .fractions
                    .as_ref()
                    .ok_or_else(|| cfg_err("protocol custom needs sequence.fractions"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
                Ok(PulseSchedule::parse_custom(&text)?)
            }
            p => Ok(PulseSchedule::generate(p, self.sequence.n)?),
        }
    }

    pub fn protocols(&self) -> Result<Vec<Protocol>, ConfigError> {
        self.sweep
            .protocols
            .iter()
            .map(|p| p.parse().map_err(ConfigError::from))
            .collect()
    }

    /// ξ values of a sweep for `n` pulses.
    pub fn xi_list(&self, n: usize) -> Result<Vec<f64>, ConfigError> {
        if !self.sweep.xi.is_empty() {
            return Ok(self.sweep.xi.clone());
        }
        let grid = match self.sweep.regime.as_str() {
            "small" => small_regime_grid(self.sweep.count, n, self.sweep.span),
            _ => large_regime_grid(self.sweep.count, n),
        };
        Ok(grid?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

//! Pulse-time generators and the merged kick/pulse event timeline.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Relative tolerance (in units of `T`) under which two event times coincide.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Uhrig: `δ_j = sin²(πj/(2n+2))`.
    Udd,
    /// Periodic bang-bang: `δ_j = j/n`.
    Pdd,
    /// Carr–Purcell–Meiboom–Gill: `δ_j = (j − 1/2)/n`.
    Cpmg,
    Custom,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Udd => "udd",
            Protocol::Pdd => "pdd",
            Protocol::Cpmg => "cpmg",
            Protocol::Custom => "custom",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "udd" => Ok(Protocol::Udd),
            "pdd" | "bang-bang" => Ok(Protocol::Pdd),
            "cpmg" => Ok(Protocol::Cpmg),
            "custom" => Ok(Protocol::Custom),
            other => Err(Error::InvalidSchedule(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Pulse instants as fractions of the horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    protocol: Protocol,
    fractions: Vec<f64>,
}

impl PulseSchedule {
    /// Builds the schedule of a named protocol with `n` pulses.
    ///
    /// `n = 0` is free evolution.
    pub fn generate(protocol: Protocol, n: usize) -> Result<Self> {
        let fractions = match protocol {
            Protocol::Udd => udd_fractions(n),
            Protocol::Pdd => pdd_fractions(n),
            Protocol::Cpmg => cpmg_fractions(n),
            Protocol::Custom => {
                return Err(Error::InvalidSchedule(
                    "custom schedules need explicit fractions".into(),
                ))
            }
        };
        Ok(Self {
            protocol,
            fractions,
        })
    }

    /// A user-supplied schedule; fractions must be strictly increasing in (0, 1].
    pub fn custom(fractions: Vec<f64>) -> Result<Self> {
        validate_fractions(&fractions)?;
        Ok(Self {
            protocol: Protocol::Custom,
            fractions,
        })
    }

    /// Parses one fraction per line. Blank lines and `#` comments are skipped.
    pub fn parse_custom(text: &str) -> Result<Self> {
        let mut fractions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::InvalidSchedule(format!("line {}: cannot parse `{line}`", lineno + 1))
            })?;
            fractions.push(v);
        }
        Self::custom(fractions)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }
}

fn validate_fractions(fractions: &[f64]) -> Result<()> {
    for (i, &f) in fractions.iter().enumerate() {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "fraction #{} = {f} outside (0, 1]",
                i + 1
            )));
        }
        if i > 0 && f <= fractions[i - 1] {
            return Err(Error::InvalidSchedule(format!(
                "fractions must be strictly increasing (#{} = {f} after {})",
                i + 1,
                fractions[i - 1]
            )));
        }
    }
    Ok(())
}

pub fn udd_fractions(n: usize) -> Vec<f64> {
    let denom = (2 * n + 2) as f64;
    (1..=n)
        .map(|j| {
            let s = (PI * j as f64 / denom).sin();
            s * s
        })
        .collect()
}

pub fn pdd_fractions(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64 / n as f64).collect()
}

pub fn cpmg_fractions(n: usize) -> Vec<f64> {
    (1..=n).map(|j| (j as f64 - 0.5) / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Kick,
    /// Zero-based pulse index.
    Pulse(usize),
    /// Observation point without any action.
    Mark,
}

impl EventKind {
    fn rank(self) -> u8 {
        match self {
            EventKind::Kick => 0,
            EventKind::Pulse(_) => 1,
            EventKind::Mark => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Kicks and pulses merged on `[0, T]`.
///
/// `durations()[i]` is the free-evolution time preceding event `i`; the
/// segment after the last event runs to `T` and is given by [`Timeline::tail`].
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    horizon: f64,
    events: Vec<Event>,
    durations: Vec<f64>,
    tail: f64,
    pulses: usize,
}

impl Timeline {
    fn assemble(horizon: f64, mut events: Vec<Event>) -> Self {
        let tol = COINCIDENCE_TOL * horizon;
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.kind.rank().cmp(&b.kind.rank())));
        // Clusters of near-coincident events share one time: a kick's if present.
        let mut start = 0;
        while start < events.len() {
            let mut end = start + 1;
            while end < events.len() && events[end].time - events[end - 1].time <= tol {
                end += 1;
            }
            let cluster = &mut events[start..end];
            let time = cluster
                .iter()
                .find(|e| e.kind == EventKind::Kick)
                .unwrap_or(&cluster[0])
                .time;
            cluster.iter_mut().for_each(|e| e.time = time);
            start = end;
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.kind.rank().cmp(&b.kind.rank())));
        for e in events.iter_mut() {
            if (horizon - e.time).abs() <= tol {
                e.time = horizon;
            }
        }
        let mut durations = Vec::with_capacity(events.len());
        let mut last = 0.0;
        for e in &events {
            durations.push(e.time - last);
            last = e.time;
        }
        let pulses = events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Pulse(_)))
            .count();
        Self {
            horizon,
            tail: horizon - last,
            events,
            durations,
            pulses,
        }
    }

    /// Same timeline with extra observation marks. Marks outside `(0, T]` are dropped.
    pub fn with_marks(&self, marks: &[f64]) -> Self {
        let mut events = self.events.clone();
        events.extend(
            marks
                .iter()
                .filter(|&&t| t > 0.0 && t <= self.horizon)
                .map(|&t| Event {
                    time: t,
                    kind: EventKind::Mark,
                }),
        );
        Self::assemble(self.horizon, events)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    /// Free evolution after the last event.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn pulse_count(&self) -> usize {
        self.pulses
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Merges kicks at `t = j·T0` (`j = 0..periods`) with pulses at `δ_j·T`.
///
/// Coincident kick and pulse: the kick applies first.
pub fn build_timeline(params: &ModelParams, schedule: &PulseSchedule) -> Result<Timeline> {
    validate_fractions(schedule.fractions())?;
    let horizon = params.horizon();
    let t0 = params.kick_period();
    let mut events: Vec<Event> = (0..params.periods())
        .map(|j| Event {
            time: j as f64 * t0,
            kind: EventKind::Kick,
        })
        .collect();
    events.extend(schedule.fractions().iter().enumerate().map(|(i, &f)| Event {
        time: f * horizon,
        kind: EventKind::Pulse(i),
    }));
    Ok(Timeline::assemble(horizon, events))
}

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use ddrobust::{EnvInit, ModelParams};

use crate::config::RunConfig;

/// Full double precision: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV file with the given header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text)
}

pub struct Manifest<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub params: &'a ModelParams,
    pub env: &'a EnvInit,
    pub elapsed: Duration,
    pub outputs: &'a [String],
}

impl Manifest<'_> {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let p = self.params;
        let _ = writeln!(s, "tool = ddrobust {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "timestamp_unix = {stamp}");
        let _ = writeln!(s, "wall_clock_s = {:.3}", self.elapsed.as_secs_f64());
        let _ = writeln!(s, "T0 = {}", num(p.kick_period()));
        let _ = writeln!(s, "k = {}", num(p.kick_strength()));
        let _ = writeln!(s, "T = {}", num(p.horizon()));
        let _ = writeln!(s, "env = {}", self.env.describe());
        let _ = writeln!(
            s,
            "parallel_feature = {}",
            ddrobust::par::Execution::available_parallelism()
        );
        let _ = writeln!(s, "outputs = {}", self.outputs.join(" "));
        let _ = writeln!(s, "\n# resolved config");
        s.push_str(&self.config.to_toml());
        s
    }
}

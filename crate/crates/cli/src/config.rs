//! Scenario configuration: defaults per subcommand, a flat `key = value` file
//! format, and flag overrides applied through the same setter.

use std::fmt;
use std::path::PathBuf;

use qsep::{Density64, ReverseRule};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {message}")]
    Numerical { message: String, flagged: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scenario {
    Fig1Diff,
    Fig2FixedPoint,
    Fig3TauXi,
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn state(&self) -> Result<Density64, CliError> {
        if self.norm() > 1.0 + 1e-12 {
            return Err(bad(format!("Bloch vector {self} has norm {} > 1", self.norm())));
        }
        Density64::from_bloch(self.x, self.y, self.z).map_err(|e| bad(e.to_string()))
    }
}

impl fmt::Display for BlochPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// Where a reference state comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec {
    Bloch(BlochPoint),
    /// Image of the input state under the channel at hand.
    ChannelOutput,
    /// The ancilla state `ξ` of the collision model.
    Xi,
}

/// Channel family for `report`; `n` composes it with itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReportChannel {
    Collision,
    /// Rotation about the y axis by `angle` radians per step.
    Unitary { angle: f64 },
    /// Measure-and-prepare with `φ = [[a, 1−b], [1−a, b]]`.
    Classical { a: f64, b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub xi_population: f64,
    pub phi: f64,
    pub n_values: Vec<usize>,
    pub gamma: StateSpec,
    pub tau: StateSpec,
    /// Input state for `report`.
    pub rho: BlochPoint,
    pub grid_resolution: usize,
    pub radius_clip: f64,
    pub reverse_rule: ReverseRule,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub channel: ReportChannel,
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            xi_population: 0.9,
            phi: 0.2,
            n_values: vec![1, 4, 16],
            gamma: StateSpec::Xi,
            tau: StateSpec::ChannelOutput,
            rho: BlochPoint::new(0.5, 0.0, 0.3),
            grid_resolution: 101,
            radius_clip: 0.999,
            reverse_rule: ReverseRule::Petz,
            threads: None,
            out: None,
            format: Format::Csv,
            channel: ReportChannel::Collision,
        };
        match scenario {
            Scenario::Fig1Diff => Self {
                xi_population: 0.95,
                phi: 0.4,
                n_values: vec![1],
                gamma: StateSpec::Bloch(BlochPoint::new(0.9, 0.0, 0.0)),
                tau: StateSpec::Bloch(BlochPoint::new(-2.0 / 3.0, 0.0, -2.0 / 3.0)),
                ..base
            },
            Scenario::Fig2FixedPoint => base,
            Scenario::Fig3TauXi => Self {
                gamma: StateSpec::Bloch(BlochPoint::new(0.8, 0.0, -0.2)),
                tau: StateSpec::Xi,
                ..base
            },
            Scenario::Report => Self {
                n_values: vec![1],
                gamma: StateSpec::Bloch(BlochPoint::new(0.3, 0.0, 0.2)),
                tau: StateSpec::Bloch(BlochPoint::new(-0.2, 0.0, 0.1)),
                format: Format::Json,
                ..base
            },
        }
    }

    /// Applies one setting. Keys use dashes; underscores are accepted too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "xi-pop" => self.xi_population = parse_f64(&key, value)?,
            "phi" => self.phi = parse_f64(&key, value)?,
            "n" => self.n_values = parse_n_list(value)?,
            "gamma" => {
                self.gamma = match parse_state_spec(&key, value)? {
                    StateSpec::ChannelOutput => return Err(bad("gamma cannot be 'output'")),
                    s => s,
                }
            }
            "tau" => self.tau = parse_state_spec(&key, value)?,
            "rho" => self.rho = parse_bloch(&key, value)?,
            "grid" => self.grid_resolution = parse_usize(&key, value)?,
            "radius-clip" => self.radius_clip = parse_f64(&key, value)?,
            "threads" => self.threads = Some(parse_usize(&key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(format!("format must be csv or json, got '{value}'"))),
                }
            }
            "variant-reverse" => {
                self.reverse_rule = if parse_bool(&key, value)? { ReverseRule::Variant } else { ReverseRule::Petz }
            }
            "channel" => {
                self.channel = match value {
                    "collision" => ReportChannel::Collision,
                    "unitary" => ReportChannel::Unitary { angle: 0.7 },
                    "classical" => ReportChannel::Classical { a: 0.9, b: 0.8 },
                    _ => return Err(bad(format!("channel must be collision, unitary or classical, got '{value}'"))),
                }
            }
            "angle" => {
                let angle = parse_f64(&key, value)?;
                self.channel = ReportChannel::Unitary { angle };
            }
            "stochastic" => {
                let v = parse_floats(&key, value, 2)?;
                self.channel = ReportChannel::Classical { a: v[0], b: v[1] };
            }
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), CliError> {
        pairs.into_iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.xi_population) {
            return Err(bad(format!("xi-pop {} outside [0, 1]", self.xi_population)));
        }
        if !self.phi.is_finite() {
            return Err(bad("phi must be finite"));
        }
        if self.n_values.is_empty() {
            return Err(bad("n needs at least one value"));
        }
        if self.grid_resolution < 2 {
            return Err(bad("grid needs at least 2 points per axis"));
        }
        if !(self.radius_clip > 0.0 && self.radius_clip <= 1.0) {
            return Err(bad(format!("radius-clip {} outside (0, 1]", self.radius_clip)));
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be positive"));
        }
        for spec in [self.gamma, self.tau] {
            if let StateSpec::Bloch(b) = spec {
                b.state()?;
            }
        }
        self.rho.state()?;
        if let ReportChannel::Classical { a, b } = self.channel {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(bad("stochastic entries must lie in [0, 1]"));
            }
        }
        if self.scenario == Scenario::Report && self.format == Format::Csv {
            return Err(bad("report output is JSON only"));
        }
        Ok(())
    }
}

/// Parses flat `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(bad(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| bad(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(bad(format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| bad(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(bad(format!("{key}: '{v}' is not a boolean"))),
    }
}

fn parse_floats(key: &str, v: &str, len: usize) -> Result<Vec<f64>, CliError> {
    let xs = v.split(',').map(|s| parse_f64(key, s.trim())).collect::<Result<Vec<_>, _>>()?;
    if xs.len() != len {
        return Err(bad(format!("{key}: expected {len} comma-separated numbers, got {}", xs.len())));
    }
    Ok(xs)
}

fn parse_bloch(key: &str, v: &str) -> Result<BlochPoint, CliError> {
    let c = parse_floats(key, v, 3)?;
    let b = BlochPoint::new(c[0], c[1], c[2]);
    b.state()?;
    Ok(b)
}

fn parse_state_spec(key: &str, v: &str) -> Result<StateSpec, CliError> {
    match v {
        "output" => Ok(StateSpec::ChannelOutput),
        "xi" => Ok(StateSpec::Xi),
        _ => parse_bloch(key, v).map(StateSpec::Bloch),
    }
}

/// Sorted, deduplicated list of positive integers.
fn parse_n_list(v: &str) -> Result<Vec<usize>, CliError> {
    let mut ns = v
        .split(',')
        .map(|s| {
            let n = parse_usize("n", s.trim())?;
            if n == 0 {
                return Err(bad("n values must be positive"));
            }
            Ok(n)
        })
        .collect::<Result<Vec<_>, _>>()?;
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

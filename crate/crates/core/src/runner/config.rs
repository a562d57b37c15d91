//! Flat `key = value` scenario files and grid specifications.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

/// Largest number of points a single grid axis may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(key: Option<&str>, message: impl Into<String>) -> Self {
        Self { line: None, key: key.map(str::to_owned), message: message.into() }
    }

    pub(crate) fn field(key: &str, message: impl Into<String>) -> Self {
        Self::new(Some(key), message)
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($(#[$vm])* $variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            fn parse(key: &str, s: &str) -> Result<Self, ConfigError> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(ConfigError::field(key, format!(
                        "unknown value {s:?}, expected one of: {}",
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Scenario {
    Fig2 => "fig2",
    Fig3 => "fig3",
    Fig4Ghz => "fig4_ghz",
    Fig4Gate => "fig4_gate",
    Fig5Ghz => "fig5_ghz",
    Fig5Gate => "fig5_gate",
    Custom => "custom",
});

keyword_enum!(
    /// Level of description used for the dynamics.
    ModelKind {
        Full => "full",
        Eliminated => "eliminated",
        Ladder => "ladder",
        Effective => "effective",
    }
);

keyword_enum!(Metric { Ghz => "ghz", Gate => "gate" });

keyword_enum!(
    /// Which diagonal gate the evolution is compared against.
    TargetKind {
        /// `α = 0`.
        Standard => "standard",
        /// `α` from the three-atom phase prediction.
        Local => "local",
        /// `α` read off the simulated gate at each time.
        Fitted => "fitted",
    }
);

keyword_enum!(Integrator { Rk4 => "rk4", Spectral => "spectral" });

impl Scenario {
    pub fn description(self) -> &'static str {
        match self {
            Scenario::Fig2 => "three-atom GHZ preparation, populations and fidelity vs time (delta=20)",
            Scenario::Fig3 => "three-atom controlled-phase gate fidelity vs time for delta in {10..14}",
            Scenario::Fig4Ghz => "GHZ fidelity over a (delta, gamma) grid",
            Scenario::Fig4Gate => "gate fidelity over a (delta, gamma) grid",
            Scenario::Fig5Ghz => "four-atom GHZ preparation (delta=20)",
            Scenario::Fig5Gate => "four-atom controlled-phase gate with fitted single-qubit phase (delta=12)",
            Scenario::Custom => "all parameters from the config file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UMode {
    /// `U = 2δ/(N-1)`.
    Resonant,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub model: ModelKind,
    pub n_atoms: usize,
    pub delta_over_omega: f64,
    pub u_mode: UMode,
    pub gamma_over_omega: f64,
    /// `None` picks a window from the scheme's timing rule.
    pub t_max_over_inv_omega: Option<f64>,
    pub n_points: usize,
    pub output_dir: Option<PathBuf>,
    pub metric: Metric,
    pub gate_target: TargetKind,
    pub delta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Extra detunings run alongside the main one by `run`.
    pub delta_set: Vec<f64>,
    pub peak_search: bool,
    pub integrator: Integrator,
    pub omega_r: f64,
    pub omega_b: f64,
    pub delta_big: f64,
}

impl ScenarioConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            model: ModelKind::Eliminated,
            n_atoms: 3,
            delta_over_omega: 20.0,
            u_mode: UMode::Resonant,
            gamma_over_omega: 0.0,
            t_max_over_inv_omega: None,
            n_points: 1001,
            output_dir: None,
            metric: Metric::Ghz,
            gate_target: TargetKind::Standard,
            delta_grid: Vec::new(),
            gamma_grid: Vec::new(),
            delta_set: Vec::new(),
            peak_search: false,
            integrator: Integrator::Rk4,
            omega_r: crate::model::EXPERIMENTAL_OMEGA_R,
            omega_b: crate::model::EXPERIMENTAL_OMEGA_B,
            delta_big: crate::model::EXPERIMENTAL_DELTA_BIG,
        };
        let fig4_delta: Vec<f64> = (8..=16).map(f64::from).collect();
        let fig4_gamma: Vec<f64> = (0..=10).map(|i| f64::from(i) * 0.001).collect();
        match scenario {
            Scenario::Fig2 | Scenario::Custom => {}
            Scenario::Fig3 => {
                c.delta_over_omega = 12.0;
                c.metric = Metric::Gate;
                c.gate_target = TargetKind::Local;
                c.delta_set = vec![10.0, 11.0, 13.0, 14.0];
            }
            Scenario::Fig4Ghz | Scenario::Fig4Gate => {
                let gate = scenario == Scenario::Fig4Gate;
                c.delta_over_omega = if gate { 12.0 } else { 14.0 };
                c.gamma_over_omega = 0.002;
                c.metric = if gate { Metric::Gate } else { Metric::Ghz };
                c.gate_target = TargetKind::Local;
                c.delta_grid = fig4_delta;
                c.gamma_grid = fig4_gamma;
                c.n_points = 201;
            }
            Scenario::Fig5Ghz => c.n_atoms = 4,
            Scenario::Fig5Gate => {
                c.n_atoms = 4;
                c.delta_over_omega = 12.0;
                c.metric = Metric::Gate;
                c.gate_target = TargetKind::Fitted;
            }
        }
        c
    }

    /// Checks cross-field consistency; grids are checked separately by scans.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, msg: String| ConfigError::field(key, msg);
        if !(2..=6).contains(&self.n_atoms) {
            return Err(err("n_atoms", format!("{} is outside [2, 6]", self.n_atoms)));
        }
        if self.n_points < 2 {
            return Err(err("n_points", "need at least 2 points".into()));
        }
        if !(self.delta_over_omega.is_finite() && self.delta_over_omega > 0.0) {
            return Err(err("delta_over_omega", "must be positive".into()));
        }
        if !(self.gamma_over_omega.is_finite() && self.gamma_over_omega >= 0.0) {
            return Err(err("gamma_over_omega", "must be finite and non-negative".into()));
        }
        if let Some(t) = self.t_max_over_inv_omega {
            if !(t.is_finite() && t > 0.0) {
                return Err(err("t_max_over_inv_omega", "must be positive".into()));
            }
        }
        if let UMode::Value(u) = self.u_mode {
            if !u.is_finite() {
                return Err(err("u_mode", "interaction must be finite".into()));
            }
            if matches!(self.model, ModelKind::Full | ModelKind::Effective) {
                return Err(err("u_mode", format!("model {} assumes the resonant interaction", self.model)));
            }
        }
        for (name, v) in [("omega_r", self.omega_r), ("omega_b", self.omega_b), ("delta_big", self.delta_big)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(name, "must be positive".into()));
            }
        }
        if let Some(d) = self.delta_set.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(err("delta_set", format!("detuning {d} must be positive")));
        }
        let reduced = matches!(self.model, ModelKind::Ladder | ModelKind::Effective);
        if reduced && self.metric == Metric::Gate {
            return Err(err("model", format!("model {} has no computational subspace for gate metrics", self.model)));
        }
        if reduced && self.gamma_over_omega > 0.0 {
            return Err(err("model", format!("model {} does not support decay", self.model)));
        }
        if self.metric == Metric::Gate && self.gate_target == TargetKind::Local && self.n_atoms != 3 {
            return Err(err("gate_target", "the local phase prediction is for three atoms; use `fitted`".into()));
        }
        Ok(())
    }
}

/// Parses `a:b:step` (inclusive, `a + i*step`) or a comma-separated list.
/// An empty or blank string yields an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let number = |s: &str| -> Result<f64, ConfigError> {
        let s = s.trim();
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ConfigError::new(None, format!("invalid grid value {s:?}"))),
        }
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(ConfigError::new(None, "range must have the form start:stop:step"));
        };
        let (a, b, step) = (number(a)?, number(b)?, number(step)?);
        if step <= 0.0 {
            return Err(ConfigError::new(None, "range step must be positive"));
        }
        if b < a {
            return Err(ConfigError::new(None, "range stop is below start"));
        }
        let count = ((b - a) / step + 1e-9).floor() + 1.0;
        if count > MAX_GRID_POINTS as f64 {
            return Err(ConfigError::new(None, format!("range expands beyond {MAX_GRID_POINTS} points")));
        }
        return Ok((0..count as usize).map(|i| a + i as f64 * step).collect());
    }
    let values = spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
    if values.len() > MAX_GRID_POINTS {
        return Err(ConfigError::new(None, format!("list longer than {MAX_GRID_POINTS} points")));
    }
    Ok(values)
}

pub const KEYS: &[&str] = &[
    "scenario",
    "model",
    "n_atoms",
    "delta_over_omega",
    "u_mode",
    "gamma_over_omega",
    "t_max_over_inv_omega",
    "n_points",
    "output_dir",
    "delta_grid",
    "gamma_grid",
    "delta_set",
    "metric",
    "gate_target",
    "peak_search",
    "integrator",
    "omega_r",
    "omega_b",
    "delta_big",
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::field(key, format!("expected a number, got {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>().map_err(|_| ConfigError::field(key, format!("expected a non-negative integer, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::field(key, format!("expected true or false, got {v:?}"))),
    }
}

fn apply(c: &mut ScenarioConfig, key: &str, v: &str) -> Result<(), ConfigError> {
    let grid = |v: &str| parse_grid(v).map_err(|e| ConfigError::field(key, e.message));
    match key {
        "scenario" => {}
        "model" => c.model = ModelKind::parse(key, v)?,
        "n_atoms" => c.n_atoms = parse_usize(key, v)?,
        "delta_over_omega" => c.delta_over_omega = parse_f64(key, v)?,
        "u_mode" => {
            c.u_mode = match v {
                "resonant" => UMode::Resonant,
                _ => UMode::Value(
                    v.parse::<f64>()
                        .map_err(|_| ConfigError::field(key, format!("expected `resonant` or a number, got {v:?}")))?,
                ),
            }
        }
        "gamma_over_omega" => c.gamma_over_omega = parse_f64(key, v)?,
        "t_max_over_inv_omega" => c.t_max_over_inv_omega = Some(parse_f64(key, v)?),
        "n_points" => c.n_points = parse_usize(key, v)?,
        "output_dir" => c.output_dir = Some(PathBuf::from(v)),
        "delta_grid" => c.delta_grid = grid(v)?,
        "gamma_grid" => c.gamma_grid = grid(v)?,
        "delta_set" => c.delta_set = grid(v)?,
        "metric" => c.metric = Metric::parse(key, v)?,
        "gate_target" => c.gate_target = TargetKind::parse(key, v)?,
        "peak_search" => c.peak_search = parse_bool(key, v)?,
        "integrator" => c.integrator = Integrator::parse(key, v)?,
        "omega_r" => c.omega_r = parse_f64(key, v)?,
        "omega_b" => c.omega_b = parse_f64(key, v)?,
        "delta_big" => c.delta_big = parse_f64(key, v)?,
        _ => return Err(ConfigError::field(key, "unknown key")),
    }
    Ok(())
}

/// Parses a config file. The `scenario` key selects a preset that the other
/// keys then override; the result is validated.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut entries: Vec<(usize, &str, &str)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(None, format!("expected `key = value`, got {line:?}")).at_line(line_no));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::field(key, "unknown key").at_line(line_no));
        }
        if !seen.insert(key) {
            return Err(ConfigError::field(key, "duplicate key").at_line(line_no));
        }
        let grid_key = matches!(key, "delta_grid" | "gamma_grid" | "delta_set");
        if value.is_empty() && !grid_key {
            return Err(ConfigError::field(key, "missing value").at_line(line_no));
        }
        entries.push((line_no, key, value));
    }
    let scenario = match entries.iter().find(|e| e.1 == "scenario") {
        Some(&(line, key, v)) => Scenario::parse(key, v).map_err(|e| e.at_line(line))?,
        None => Scenario::Custom,
    };
    let mut config = ScenarioConfig::preset(scenario);
    for (line, key, value) in entries {
        apply(&mut config, key, value).map_err(|e| e.at_line(line))?;
    }
    config.validate()?;
    Ok(config)
}

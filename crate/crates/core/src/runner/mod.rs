//! Scenario engine behind the `rydsim` CLI: named reproductions, parameter
//! scans and deterministic CSV/JSON output.

mod config;
pub mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

pub use config::{
    parse_config, parse_grid, ConfigError, Integrator, Metric, ModelKind, Scenario, ScenarioConfig, TargetKind,
    UMode, KEYS, MAX_GRID_POINTS,
};

use crate::dynamics::{propagate_density, propagate_state, propagate_state_exact, TimeGrid, Trajectory, DEFAULT_TOL};
use crate::metrics::{equal_weight_input, extract_alpha, ghz_fidelity, ideal_output, state_fidelity, GateExtractor};
use crate::model::{
    build_eliminated_h, build_full_h, build_gate_target, build_ladder_h, collapse_ops, resonance_u, PhysParams,
};
use crate::perturbation::{
    calibrate_full_model, effective_model, gate_time, ghz_time, numeric_effective_model, predicted_alpha,
    EffectiveModel,
};
use crate::qkernel::{AtomBasis, Level, Operator, QuantumState};

/// Points used when searching for the metric's peak around the prescribed time.
const PEAK_SEARCH_POINTS: usize = 201;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numeric failure: {0}")]
    Numeric(#[from] crate::Error),
    #[error("numeric failure at delta={delta}, gamma={gamma}: {source}")]
    Point { delta: f64, gamma: f64, source: crate::Error },
}

impl RunError {
    /// 2 for configuration and I/O problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Numeric(_) | RunError::Point { .. } => 3,
        }
    }
}

/// One simulated time series.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub delta: f64,
    pub times: Vec<f64>,
    pub pop_ground: Vec<f64>,
    pub pop_excited: Vec<f64>,
    pub metric: Vec<f64>,
}

impl Series {
    /// Largest metric value and its first time.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (&t, &v) in self.times.iter().zip(&self.metric) {
            if v > best.0 {
                best = (v, t);
            }
        }
        best
    }

    pub fn to_csv(&self, metric: Metric) -> String {
        let column = match metric {
            Metric::Ghz => "f_ghz",
            Metric::Gate => "f_gate",
        };
        let rows = (0..self.times.len())
            .map(|i| vec![self.times[i], self.pop_ground[i], self.pop_excited[i], self.metric[i]]);
        output::csv(&["t", "pop_111", "pop_rrr", column], rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub main: Series,
    /// Additional detunings requested through `delta_set`.
    pub extra: Vec<Series>,
    pub summary: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub deltas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub metric: Metric,
    /// `values[i][j]` belongs to `(deltas[i], gammas[j])`.
    pub values: Vec<Vec<f64>>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_csv(&self) -> String {
        let rows = self.deltas.iter().enumerate().flat_map(|(i, &d)| {
            self.gammas.iter().enumerate().map(move |(j, &g)| (i, j, d, g))
        });
        output::csv(
            &["delta_over_omega", "gamma_over_omega", "fidelity"],
            rows.map(|(i, j, d, g)| vec![d, g, self.values[i][j]]).collect::<Vec<_>>(),
        )
    }
}

/// Parameters of a single simulation, resolved from a config.
#[derive(Clone, Debug)]
struct Point {
    model: ModelKind,
    n_atoms: usize,
    delta: f64,
    u: UMode,
    gamma: f64,
    metric: Metric,
    target: TargetKind,
    integrator: Integrator,
    lasers: (f64, f64, f64),
}

impl Point {
    fn from_config(c: &ScenarioConfig, delta: f64, gamma: f64) -> Self {
        Self {
            model: c.model,
            n_atoms: c.n_atoms,
            delta,
            u: c.u_mode,
            gamma,
            metric: c.metric,
            target: c.gate_target,
            integrator: c.integrator,
            lasers: (c.omega_r, c.omega_b, c.delta_big),
        }
    }

    fn u(&self) -> crate::Result<f64> {
        match self.u {
            UMode::Resonant => resonance_u(self.n_atoms, self.delta),
            UMode::Value(u) => Ok(u),
        }
    }

    fn timing_model(&self) -> crate::Result<EffectiveModel> {
        if self.n_atoms == 3 {
            effective_model(3, self.delta)
        } else {
            numeric_effective_model(self.n_atoms, self.delta)
        }
    }

    /// Time at which the scheme prescribes evaluating the metric.
    fn prescribed_time(&self) -> crate::Result<f64> {
        let m = self.timing_model()?;
        match self.metric {
            Metric::Ghz => ghz_time(&m, 0),
            Metric::Gate => gate_time(&m),
        }
    }

    /// Hamiltonian, collapse operators and the product basis (if any).
    fn system(&self) -> crate::Result<(Operator, Vec<Operator>, Option<AtomBasis>)> {
        let n = self.n_atoms;
        match self.model {
            ModelKind::Eliminated => {
                let (omega_r, omega_b, delta_big) = self.lasers;
                let mut p = PhysParams::ideal(n, self.delta, self.u()?).with_rydberg_decay(self.gamma);
                (p.omega_r, p.omega_b, p.delta_big) = (omega_r, omega_b, delta_big);
                // frequencies are in units of the effective Rabi frequency
                let scale = p.omega_eff();
                p.omega_r /= scale.sqrt();
                p.omega_b /= scale.sqrt();
                let basis = AtomBasis::three_level(n)?;
                let c = collapse_ops(&p, &basis)?;
                Ok((build_eliminated_h(&p, true)?, c, Some(basis)))
            }
            ModelKind::Full => {
                let (omega_r, omega_b, delta_big) = self.lasers;
                let scale = (omega_r * omega_b / delta_big).sqrt();
                let cal = calibrate_full_model(n, omega_r / scale, omega_b / scale, delta_big, self.delta)?;
                let p = cal.params.with_rydberg_decay(self.gamma);
                let (h, c) = build_full_h(&p)?;
                Ok((h, c, Some(AtomBasis::four_level(n)?)))
            }
            ModelKind::Ladder => Ok((build_ladder_h(n, self.delta, self.u()?)?, Vec::new(), None)),
            ModelKind::Effective => Ok((self.timing_model()?.hamiltonian()?, Vec::new(), None)),
        }
    }
}

fn evolve(
    h: &Operator,
    collapse: &[Operator],
    psi0: &QuantumState,
    grid: &TimeGrid,
    integrator: Integrator,
) -> crate::Result<Trajectory> {
    if !collapse.is_empty() {
        return propagate_density(h, collapse, psi0, grid, DEFAULT_TOL);
    }
    match integrator {
        Integrator::Rk4 => propagate_state(h, psi0, grid, DEFAULT_TOL),
        Integrator::Spectral => propagate_state_exact(h, psi0, grid),
    }
}

fn simulate(point: &Point, grid: &TimeGrid) -> crate::Result<Series> {
    let (h, collapse, basis) = point.system()?;
    let (i_ground, i_excited) = h.tag().extremal_indices().expect("labeled model basis");
    let psi0 = match (&basis, point.metric) {
        (Some(b), Metric::Gate) => equal_weight_input(b)?,
        (Some(b), Metric::Ghz) => QuantumState::product(b, &vec![Level::One; point.n_atoms])?,
        (None, _) => QuantumState::basis_state(h.tag().clone(), h.dim(), i_ground)?,
    };
    let traj = evolve(&h, &collapse, &psi0, grid, point.integrator)?;
    let metric = match point.metric {
        Metric::Ghz => traj.states.iter().map(|s| ghz_fidelity(s, point.n_atoms)).collect::<crate::Result<Vec<_>>>()?,
        Metric::Gate => {
            let basis = basis.as_ref().expect("gate metrics need a product basis");
            let alpha = alpha_rule(point, &h)?;
            traj.states
                .iter()
                .zip(grid.times())
                .map(|(s, t)| {
                    let target = build_gate_target(point.n_atoms, alpha(t))?;
                    state_fidelity(s, &ideal_output(basis, &target)?)
                })
                .collect::<crate::Result<Vec<_>>>()?
        }
    };
    Ok(Series {
        delta: point.delta,
        times: grid.times(),
        pop_ground: traj.populations(i_ground),
        pop_excited: traj.populations(i_excited),
        metric,
    })
}

/// Single-qubit phase of the comparison gate as a function of time.
fn alpha_rule(point: &Point, h: &Operator) -> crate::Result<Box<dyn Fn(f64) -> f64>> {
    Ok(match point.target {
        TargetKind::Standard => Box::new(|_| 0.0),
        TargetKind::Local => {
            let a = predicted_alpha(point.delta);
            Box::new(move |_| a)
        }
        TargetKind::Fitted => {
            // the phase is read off the decay-free evolution
            let extractor = GateExtractor::new(h, point.n_atoms)?;
            Box::new(move |t| extract_alpha(&extractor.at(t)).unwrap_or(0.0))
        }
    })
}

/// Metric at the prescribed time, or its maximum over `[0.5 t, 1.5 t]` when
/// `peak_search` is set.
fn evaluate_point(point: &Point, peak_search: bool) -> crate::Result<f64> {
    let t = point.prescribed_time()?;
    if !peak_search {
        return Ok(simulate(point, &TimeGrid::new(0.0, t, 2)?)?.metric[1]);
    }
    // 3 (n - 1) / 2 + 1 points on [0, 1.5 t]; the last n lie in [0.5 t, 1.5 t]
    let n = PEAK_SEARCH_POINTS;
    let series = simulate(point, &TimeGrid::new(0.0, 1.5 * t, 3 * (n - 1) / 2 + 1)?)?;
    Ok(series.metric[(n - 1) / 2..].iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn default_window(point: &Point) -> crate::Result<f64> {
    let t = point.prescribed_time()?;
    Ok(match point.metric {
        Metric::Ghz => 4.0 * t,
        Metric::Gate => 1.5 * t,
    })
}

fn series_for(config: &ScenarioConfig, delta: f64) -> Result<Series, RunError> {
    let point = Point::from_config(config, delta, config.gamma_over_omega);
    let t_max = match config.t_max_over_inv_omega {
        Some(t) => t,
        None => default_window(&point)?,
    };
    let grid = TimeGrid::new(0.0, t_max, config.n_points)?;
    Ok(simulate(&point, &grid)?)
}

/// Simulates the configured scenario without touching the filesystem.
pub fn simulate_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, RunError> {
    config.validate()?;
    let main = series_for(config, config.delta_over_omega)?;
    let extra = config
        .delta_set
        .iter()
        .filter(|&&d| d != config.delta_over_omega)
        .map(|&d| series_for(config, d))
        .collect::<Result<Vec<_>, _>>()?;
    let (peak_value, peak_time) = main.peak();
    let summary = json!({
        "scenario": config.scenario.as_str(),
        "params": params_json(config),
        "peak_value": peak_value,
        "peak_time": peak_time,
        "version": crate::VERSION,
    });
    Ok(ScenarioOutput { main, extra, summary })
}

fn params_json(c: &ScenarioConfig) -> serde_json::Value {
    let u = match c.u_mode {
        UMode::Resonant => resonance_u(c.n_atoms, c.delta_over_omega).unwrap_or(f64::NAN),
        UMode::Value(u) => u,
    };
    json!({
        "model": c.model.as_str(),
        "n_atoms": c.n_atoms,
        "delta_over_omega": c.delta_over_omega,
        "u_mode": match c.u_mode { UMode::Resonant => "resonant", UMode::Value(_) => "value" },
        "u_over_omega": u,
        "gamma_over_omega": c.gamma_over_omega,
        "t_max_over_inv_omega": c.t_max_over_inv_omega,
        "n_points": c.n_points,
        "metric": c.metric.as_str(),
        "gate_target": c.gate_target.as_str(),
        "integrator": c.integrator.as_str(),
        "delta_set": c.delta_set,
        "omega_r": c.omega_r,
        "omega_b": c.omega_b,
        "delta_big": c.delta_big,
    })
}

fn output_dir(config: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, contents) in files {
        let path = dir.join(name);
        output::write_file(&path, contents).map_err(io(&path))?;
    }
    Ok(())
}

/// Runs the scenario and writes `timeseries.csv` and `summary.json` (plus
/// `timeseries_delta_<x>.csv` per extra detuning) into the output directory.
/// Nothing is written if the simulation fails.
pub fn run_scenario(config: &ScenarioConfig, out: Option<&Path>) -> Result<ScenarioOutput, RunError> {
    let result = simulate_scenario(config)?;
    let mut files = vec![("timeseries.csv".to_owned(), result.main.to_csv(config.metric))];
    for s in &result.extra {
        files.push((format!("timeseries_delta_{}.csv", output::format_g(s.delta)), s.to_csv(config.metric)));
    }
    let mut summary = serde_json::to_string_pretty(&result.summary).expect("json values serialize");
    summary.push('\n');
    files.push(("summary.json".to_owned(), summary));
    write_all(&output_dir(config, out), &files)?;
    Ok(result)
}

/// Evaluates the metric on every `(delta, gamma)` grid point using up to
/// `workers` threads (0 picks the number of CPUs). Results are ordered by
/// grid index regardless of scheduling.
pub fn compute_scan(config: &ScenarioConfig, workers: usize) -> Result<ScanResult, RunError> {
    config.validate()?;
    if config.delta_grid.is_empty() {
        return Err(ConfigError::field("delta_grid", "grid is empty").into());
    }
    if config.gamma_grid.is_empty() {
        return Err(ConfigError::field("gamma_grid", "grid is empty").into());
    }
    if let Some(d) = config.delta_grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(ConfigError::field("delta_grid", format!("detuning {d} must be positive")).into());
    }
    if let Some(g) = config.gamma_grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(ConfigError::field("gamma_grid", format!("rate {g} must be non-negative")).into());
    }
    let reduced = matches!(config.model, ModelKind::Ladder | ModelKind::Effective);
    if reduced && config.gamma_grid.iter().any(|&g| g > 0.0) {
        return Err(ConfigError::field("model", format!("model {} does not support decay", config.model)).into());
    }
    let points: Vec<(f64, f64)> = config
        .delta_grid
        .iter()
        .flat_map(|&d| config.gamma_grid.iter().map(move |&g| (d, g)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::field("workers", e.to_string()))?;
    let flat: Vec<f64> = pool.install(|| {
        points
            .par_iter()
            .map(|&(delta, gamma)| {
                evaluate_point(&Point::from_config(config, delta, gamma), config.peak_search)
                    .map_err(|source| RunError::Point { delta, gamma, source })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let n_gamma = config.gamma_grid.len();
    Ok(ScanResult {
        deltas: config.delta_grid.clone(),
        gammas: config.gamma_grid.clone(),
        metric: config.metric,
        values: flat.chunks(n_gamma).map(<[f64]>::to_vec).collect(),
    })
}

/// [`compute_scan`] followed by writing `scan.csv`.
pub fn run_scan(config: &ScenarioConfig, workers: usize, out: Option<&Path>) -> Result<ScanResult, RunError> {
    let result = compute_scan(config, workers)?;
    write_all(&output_dir(config, out), &[("scan.csv".to_owned(), result.to_csv())])?;
    Ok(result)
}

/// `(name, description)` of every built-in scenario.
pub fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    Scenario::ALL.iter().map(|s| (s.as_str(), s.description())).collect()
}

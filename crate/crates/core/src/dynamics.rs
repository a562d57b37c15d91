//! Time propagation on a fixed uniform grid.
//!
//! Schrödinger and Lindblad evolution use classical fourth-order Runge-Kutta
//! with internal substepping: each grid interval is split so that the local
//! step satisfies `h <= 1 / (50 max|H_ij|)`. The exact propagator
//! `exp(-iHt)` comes from a Hermitian eigendecomposition and doubles as an
//! independent check on the integrator.
//!
//! The master equation is taken in Lindblad form,
//! `dρ/dt = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})`.

use nalgebra::SymmetricEigen;

use crate::error::{invalid, Error, Result};
use crate::qkernel::{BasisTag, CMatrix, CVector, Operator, QuantumState, C64, ZERO};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Substeps per unit time per unit of the largest generator entry.
pub const STEP_DENSITY: f64 = 50.0;
/// Maximum number of step doublings tried on a single grid interval.
const MAX_REFINEMENTS: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(invalid("time grid", format!("need t_end > t_start, got [{t_start}, {t_end}]")));
        }
        if n_points < 2 {
            return Err(invalid("time grid", "need at least 2 points"));
        }
        Ok(Self { t_start, t_end, n_points })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<QuantumState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Population of basis state `index` along the trajectory.
    pub fn populations(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(index)).collect()
    }

    pub fn last(&self) -> &QuantumState {
        self.states.last().expect("trajectory has at least two points")
    }
}

/// Compressed-row copy of a dense operator; the integrators spend nearly
/// all their time in products with very sparse Hamiltonians.
#[derive(Clone, Debug)]
struct SparseRows {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseRows {
    fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }
}

struct Rk4Work {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
        }
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

fn rk4_steps<F>(deriv: &F, y: &mut [C64], h: f64, n_steps: usize, w: &mut Rk4Work)
where
    F: Fn(&[C64], &mut [C64]),
{
    for _ in 0..n_steps {
        deriv(y, &mut w.k1);
        axpy_into(&mut w.tmp, y, 0.5 * h, &w.k1);
        deriv(&w.tmp, &mut w.k2);
        axpy_into(&mut w.tmp, y, 0.5 * h, &w.k2);
        deriv(&w.tmp, &mut w.k3);
        axpy_into(&mut w.tmp, y, h, &w.k3);
        deriv(&w.tmp, &mut w.k4);
        let c = h / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (w.k1[i] + (w.k2[i] + w.k3[i]) * 2.0 + w.k4[i]) * c;
        }
    }
}

/// `out = -i H psi`
fn schrodinger_deriv(h: &SparseRows, psi: &[C64], out: &mut [C64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (j, v) in h.row(i) {
            acc += v * psi[j];
        }
        *o = C64::new(acc.im, -acc.re);
    }
}

/// Lindblad generator with `h_eff = H - (i/2) Σ L†L` and row-major `rho`.
struct Lindbladian {
    h_eff: SparseRows,
    jumps: Vec<Vec<(usize, usize, C64)>>,
}

impl Lindbladian {
    fn new(h: &Operator, collapse: &[Operator]) -> Result<Self> {
        let mut h_eff = h.matrix().clone();
        for l in collapse {
            h_eff -= (l.matrix().adjoint() * l.matrix()) * C64::new(0.0, 0.5);
        }
        let jumps = collapse
            .iter()
            .map(|l| SparseRows::from_dense(l.matrix()).entries().collect())
            .collect();
        Ok(Self { h_eff: SparseRows::from_dense(&h_eff), jumps })
    }

    fn deriv(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.h_eff.dim;
        // -i (H_eff rho - rho H_eff†)
        for a in 0..n {
            for b in 0..n {
                let mut left = ZERO;
                for (k, v) in self.h_eff.row(a) {
                    left += v * rho[k * n + b];
                }
                let mut right = ZERO;
                for (k, v) in self.h_eff.row(b) {
                    right += rho[a * n + k] * v.conj();
                }
                let d = left - right;
                out[a * n + b] = C64::new(d.im, -d.re);
            }
        }
        for jump in &self.jumps {
            for &(a, k, v1) in jump {
                for &(b, l, v2) in jump {
                    out[a * n + b] += v1 * rho[k * n + l] * v2.conj();
                }
            }
        }
    }

    fn max_entry(&self) -> f64 {
        self.h_eff.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn hermitian_tol(h: &Operator) -> f64 {
    1e-10 * h.max_abs_entry().max(1.0)
}

fn require_hermitian(h: &Operator) -> Result<()> {
    let err = h.hermiticity_error();
    if err > hermitian_tol(h) {
        Err(Error::NotHermitian(err))
    } else {
        Ok(())
    }
}

fn require_compatible(h: &Operator, state: &QuantumState) -> Result<()> {
    if h.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: state.dim() });
    }
    if !h.tag().compatible(state.tag()) {
        return Err(Error::BasisMismatch { left: h.tag().to_string(), right: state.tag().to_string() });
    }
    Ok(())
}

fn result_tag(h: &Operator, state: &QuantumState) -> BasisTag {
    match state.tag() {
        BasisTag::Unlabeled => h.tag().clone(),
        t => t.clone(),
    }
}

fn substeps(dt: f64, max_entry: f64) -> usize {
    ((dt * STEP_DENSITY * max_entry).ceil() as usize).max(1)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed-step RK4 for `dψ/dt = -iHψ` over time `t` in `n_steps` steps.
pub fn rk4_evolve(h: &Operator, psi: &CVector, t: f64, n_steps: usize) -> Result<CVector> {
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi.len() });
    }
    let sparse = SparseRows::from_dense(h.matrix());
    let mut y: Vec<C64> = psi.iter().copied().collect();
    let mut w = Rk4Work::new(y.len());
    let n_steps = n_steps.max(1);
    rk4_steps(&|x: &[C64], o: &mut [C64]| schrodinger_deriv(&sparse, x, o), &mut y, t / n_steps as f64, n_steps, &mut w);
    Ok(CVector::from_vec(y))
}

/// Solves `dψ/dt = -iHψ` from `grid.t_start()`, returning the state at every
/// grid point. Each interval is refined until the norm drift it introduces
/// stays within its share of `tol`, so `max_t |‖ψ(t)‖ - 1| <= tol`.
pub fn propagate_state(h: &Operator, psi0: &QuantumState, grid: &TimeGrid, tol: f64) -> Result<Trajectory> {
    require_hermitian(h)?;
    propagate_pure(h, psi0, grid, Some(tol))
}

/// No-jump evolution under a non-Hermitian generator `H - (i/2) Σ L†L`; the
/// norm decays and is not controlled.
pub fn propagate_non_hermitian(h_eff: &Operator, psi0: &QuantumState, grid: &TimeGrid) -> Result<Trajectory> {
    propagate_pure(h_eff, psi0, grid, None)
}

fn propagate_pure(h: &Operator, psi0: &QuantumState, grid: &TimeGrid, tol: Option<f64>) -> Result<Trajectory> {
    require_compatible(h, psi0)?;
    let amps = psi0
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("state propagation needs a pure state".into()))?;
    let tag = result_tag(h, psi0);
    let sparse = SparseRows::from_dense(h.matrix());
    let deriv = |x: &[C64], o: &mut [C64]| schrodinger_deriv(&sparse, x, o);
    let dt = grid.dt();
    let base_steps = substeps(dt, h.max_abs_entry());
    let span = grid.t_end() - grid.t_start();

    let mut y: Vec<C64> = amps.iter().copied().collect();
    let mut trial = y.clone();
    let mut w = Rk4Work::new(y.len());
    let mut states = Vec::with_capacity(grid.n_points());
    states.push(QuantumState::pure_unchecked(tag.clone(), amps.clone()));
    for i in 1..grid.n_points() {
        let step = grid.time(i) - grid.time(i - 1);
        let start_norm = norm(&y);
        let mut n = base_steps;
        let mut refinements = 0;
        loop {
            trial.copy_from_slice(&y);
            rk4_steps(&deriv, &mut trial, step / n as f64, n, &mut w);
            let end_norm = norm(&trial);
            if !end_norm.is_finite() {
                return Err(Error::NonFinite("state propagation"));
            }
            let Some(tol) = tol else { break };
            let drift = (end_norm - start_norm).abs();
            if drift <= tol * step / span {
                break;
            }
            refinements += 1;
            if refinements > MAX_REFINEMENTS {
                return Err(Error::ToleranceNotMet { tol, time: grid.time(i), drift });
            }
            n *= 2;
        }
        std::mem::swap(&mut y, &mut trial);
        states.push(QuantumState::pure_unchecked(tag.clone(), CVector::from_column_slice(&y)));
    }
    Ok(Trajectory { grid: *grid, states })
}

/// Lindblad evolution of `rho0` (pure inputs are converted to `|ψ><ψ|`).
/// Trace and Hermiticity are checked against `tol` at every grid point.
pub fn propagate_density(
    h: &Operator,
    collapse: &[Operator],
    rho0: &QuantumState,
    grid: &TimeGrid,
    tol: f64,
) -> Result<Trajectory> {
    require_hermitian(h)?;
    require_compatible(h, rho0)?;
    for l in collapse {
        if l.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), found: l.dim() });
        }
        if !l.tag().compatible(h.tag()) {
            return Err(Error::BasisMismatch { left: h.tag().to_string(), right: l.tag().to_string() });
        }
    }
    let tag = result_tag(h, rho0);
    let n = h.dim();
    let lind = Lindbladian::new(h, collapse)?;
    let deriv = |x: &[C64], o: &mut [C64]| lind.deriv(x, o);
    let n_steps = substeps(grid.dt(), lind.max_entry());

    let rho = rho0.density();
    let mut y: Vec<C64> = (0..n * n).map(|k| rho[(k / n, k % n)]).collect();
    let mut w = Rk4Work::new(y.len());
    let mut states = Vec::with_capacity(grid.n_points());
    states.push(QuantumState::mixed_unchecked(tag.clone(), rho));
    for i in 1..grid.n_points() {
        let step = grid.time(i) - grid.time(i - 1);
        rk4_steps(&deriv, &mut y, step / n_steps as f64, n_steps, &mut w);
        let m = CMatrix::from_fn(n, n, |a, b| y[a * n + b]);
        let trace_drift = (m.trace() - C64::new(1.0, 0.0)).norm();
        if !trace_drift.is_finite() {
            return Err(Error::NonFinite("density propagation"));
        }
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let drift = trace_drift.max(herm);
        if drift > tol {
            return Err(Error::ToleranceNotMet { tol, time: grid.time(i), drift });
        }
        states.push(QuantumState::mixed_unchecked(tag.clone(), m));
    }
    Ok(Trajectory { grid: *grid, states })
}

/// Lindblad evolution of an arbitrary (not necessarily physical) operator
/// `x` for time `t`, with the same step rule as [`propagate_density`].
pub(crate) fn evolve_lindblad_raw(h: &Operator, collapse: &[Operator], x: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = h.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.nrows() });
    }
    let lind = Lindbladian::new(h, collapse)?;
    let mut y: Vec<C64> = (0..n * n).map(|k| x[(k / n, k % n)]).collect();
    if t != 0.0 {
        let n_steps = substeps(t.abs(), lind.max_entry());
        let mut w = Rk4Work::new(y.len());
        rk4_steps(&|a: &[C64], o: &mut [C64]| lind.deriv(a, o), &mut y, t / n_steps as f64, n_steps, &mut w);
    }
    Ok(CMatrix::from_fn(n, n, |a, b| y[a * n + b]))
}

/// Eigendecomposition `H = V diag(w) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectral {
    tag: BasisTag,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Spectral {
    pub fn new(h: &Operator) -> Result<Self> {
        require_hermitian(h)?;
        let herm = (h.matrix() + h.matrix().adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        Ok(Self { tag: h.tag().clone(), values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> Operator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &w) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -w * t);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
        let mat = scaled * self.vectors.adjoint();
        debug_assert_eq!(mat.nrows(), n);
        Operator::new(self.tag.clone(), mat).expect("propagator is finite and square")
    }

    /// `exp(-iHt) psi` without forming the full propagator.
    pub fn evolve(&self, psi: &CVector, t: f64) -> CVector {
        let mut coeffs = self.vectors.adjoint() * psi;
        for (c, &w) in coeffs.iter_mut().zip(&self.values) {
            *c *= C64::from_polar(1.0, -w * t);
        }
        &self.vectors * coeffs
    }
}

/// `U(t) = exp(-iHt)` by Hermitian eigendecomposition.
pub fn propagator_matrix(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Spectral::new(h)?.propagator(t))
}

/// Exact unitary trajectory via [`Spectral`], used where the step-size rule
/// would be prohibitive (the four-level model).
pub fn propagate_state_exact(h: &Operator, psi0: &QuantumState, grid: &TimeGrid) -> Result<Trajectory> {
    require_compatible(h, psi0)?;
    let amps = psi0
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("state propagation needs a pure state".into()))?;
    let spectral = Spectral::new(h)?;
    let tag = result_tag(h, psi0);
    let t0 = grid.t_start();
    let states = grid
        .times()
        .into_iter()
        .map(|t| QuantumState::pure_unchecked(tag.clone(), spectral.evolve(amps, t - t0)))
        .collect();
    Ok(Trajectory { grid: *grid, states })
}

//! Figures of merit: state and GHZ fidelities, gate extraction on the
//! computational subspace, and gate fidelities with and without decay.

use std::f64::consts::FRAC_PI_2;

use crate::dynamics::{evolve_lindblad_raw, propagate_density, Spectral, TimeGrid, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::model::GateTarget;
use crate::qkernel::{AtomBasis, BasisTag, CMatrix, CVector, Operator, QuantumState, C64, ONE, ZERO};

/// Largest `leakage + max|off-diagonal|` for which a phase can be read off.
pub const DIAGONAL_DOMINANCE_LIMIT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityCurve {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl FidelityCurve {
    /// Largest value and the first grid time at which it occurs.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, self.grid.t_start());
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, self.grid.time(i));
            }
        }
        best
    }
}

/// Evolution operator restricted to the computational subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedGate {
    pub n_qubits: usize,
    pub matrix: Operator,
    /// Largest norm deficit of any column, i.e. amplitude left outside the
    /// computational subspace.
    pub leakage: f64,
}

impl ExtractedGate {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let m = self.matrix.matrix();
        (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm())
            .fold(0.0, f64::max)
    }

    /// Off-diagonal population averaged over input strings.
    pub fn off_diagonal_weight(&self) -> f64 {
        let d = self.dim();
        let m = self.matrix.matrix();
        let total: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        total / d as f64
    }
}

fn check_target(state: &QuantumState, target: &QuantumState) -> Result<()> {
    if state.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: state.dim() });
    }
    if !state.tag().compatible(target.tag()) {
        return Err(Error::BasisMismatch { left: state.tag().to_string(), right: target.tag().to_string() });
    }
    Ok(())
}

/// `|<φ|ψ>|²` for a pure state, `<φ|ρ|φ>` for a mixed one.
pub fn state_fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    check_target(state, target)?;
    let phi = target
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("fidelity target must be pure".into()))?;
    Ok(overlap(state, phi))
}

fn overlap(state: &QuantumState, phi: &CVector) -> f64 {
    match state {
        QuantumState::Pure { amps, .. } => phi.dotc(amps).norm_sqr(),
        QuantumState::Mixed { rho, .. } => phi.dotc(&(rho * phi)).re,
    }
}

/// `(|1..1> + e^{iφ}|r..r>)/√2` in the basis described by `tag`.
pub fn ghz_state(tag: &BasisTag, phase: f64) -> Result<QuantumState> {
    let (g, e) = tag
        .extremal_indices()
        .ok_or_else(|| Error::InvalidBasis(format!("no |1..1>/|r..r> states in {tag}")))?;
    let dim = tag.dim().expect("labeled basis");
    let mut amps = CVector::zeros(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[g] = C64::new(s, 0.0);
    amps[e] = C64::from_polar(s, phase);
    QuantumState::pure(tag.clone(), amps)
}

/// Fidelity with `(|1..1> ± i|r..r>)/√2`, maximized over the sign.
pub fn ghz_fidelity(state: &QuantumState, n_atoms: usize) -> Result<f64> {
    let tag = state.tag();
    match tag.n_atoms() {
        Some(n) if n == n_atoms => {}
        Some(n) => return Err(Error::DimensionMismatch { expected: n_atoms, found: n }),
        None => return Err(Error::InvalidBasis(format!("cannot locate GHZ components in {tag}"))),
    }
    let plus = ghz_state(tag, FRAC_PI_2)?;
    let minus = ghz_state(tag, -FRAC_PI_2)?;
    Ok(state_fidelity(state, &plus)?.max(state_fidelity(state, &minus)?))
}

pub fn ghz_fidelity_curve(states: &[QuantumState], grid: &TimeGrid, n_atoms: usize) -> Result<FidelityCurve> {
    let values = states.iter().map(|s| ghz_fidelity(s, n_atoms)).collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve { grid: *grid, values })
}

fn product_basis(h: &Operator, n_qubits: usize) -> Result<AtomBasis> {
    match h.tag() {
        BasisTag::Product(b) if b.n_atoms() == n_qubits => Ok(b.clone()),
        BasisTag::Product(b) => Err(Error::DimensionMismatch { expected: n_qubits, found: b.n_atoms() }),
        other => Err(Error::InvalidBasis(format!("gate extraction needs a product basis, got {other}"))),
    }
}

/// Caches the eigendecomposition so that gates can be read off at many times.
#[derive(Clone, Debug)]
pub struct GateExtractor {
    spectral: Spectral,
    indices: Vec<usize>,
    n_qubits: usize,
}

impl GateExtractor {
    pub fn new(h: &Operator, n_qubits: usize) -> Result<Self> {
        let basis = product_basis(h, n_qubits)?;
        Ok(Self { spectral: Spectral::new(h)?, indices: basis.computational_indices()?, n_qubits })
    }

    pub fn at(&self, t: f64) -> ExtractedGate {
        let u = self.spectral.propagator(t);
        let d = self.indices.len();
        let m = CMatrix::from_fn(d, d, |i, j| u.get(self.indices[i], self.indices[j]));
        let leakage = (0..d).map(|j| 1.0 - m.column(j).norm()).fold(0.0, f64::max).max(0.0);
        let matrix = Operator::new(BasisTag::Computational { n_qubits: self.n_qubits }, m)
            .expect("finite square block");
        ExtractedGate { n_qubits: self.n_qubits, matrix, leakage }
    }
}

/// Evolves every computational string for time `t` and keeps the block on
/// the computational subspace.
pub fn extract_gate(h: &Operator, n_qubits: usize, t: f64) -> Result<ExtractedGate> {
    Ok(GateExtractor::new(h, n_qubits)?.at(t))
}

/// `|tr(U† U_target)| / 2^N`.
pub fn unitary_gate_fidelity(gate: &ExtractedGate, target: &GateTarget) -> Result<f64> {
    if gate.n_qubits != target.n_qubits {
        return Err(Error::DimensionMismatch { expected: target.n_qubits, found: gate.n_qubits });
    }
    let tr = (gate.matrix.matrix().adjoint() * target.matrix.matrix()).trace();
    Ok(tr.norm() / gate.dim() as f64)
}

/// Equal-weight superposition of all computational strings.
pub fn equal_weight_input(basis: &AtomBasis) -> Result<QuantumState> {
    let idx = basis.computational_indices()?;
    let mut amps = CVector::zeros(basis.dim());
    let a = C64::new(1.0 / (idx.len() as f64).sqrt(), 0.0);
    for i in idx {
        amps[i] = a;
    }
    QuantumState::pure(BasisTag::Product(basis.clone()), amps)
}

/// `U_target` applied to the equal-weight input, written in `basis`.
pub fn ideal_output(basis: &AtomBasis, target: &GateTarget) -> Result<QuantumState> {
    let idx = basis.computational_indices()?;
    if idx.len() != 1 << target.n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << target.n_qubits, found: idx.len() });
    }
    let mut amps = CVector::zeros(basis.dim());
    let s = 1.0 / (idx.len() as f64).sqrt();
    for (k, &i) in idx.iter().enumerate() {
        amps[i] = target.matrix.get(k, k) * s;
    }
    QuantumState::pure(BasisTag::Product(basis.clone()), amps)
}

/// Fidelity of the master-equation output with the ideal gate output, for
/// the equal-weight input, on every point of `grid` (starting at t = 0).
pub fn dissipative_gate_fidelity_curve(
    h: &Operator,
    collapse: &[Operator],
    target: &GateTarget,
    grid: &TimeGrid,
) -> Result<FidelityCurve> {
    let basis = product_basis(h, target.n_qubits)?;
    let input = equal_weight_input(&basis)?;
    let ideal = ideal_output(&basis, target)?;
    let traj = propagate_density(h, collapse, &input, grid, DEFAULT_TOL)?;
    let values = traj.states.iter().map(|s| state_fidelity(s, &ideal)).collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve { grid: *grid, values })
}

/// `<Ψ_ideal| ρ(t) |Ψ_ideal>` for the equal-weight input evolved under the
/// master equation.
pub fn dissipative_gate_fidelity(
    h: &Operator,
    collapse: &[Operator],
    target: &GateTarget,
    t: f64,
) -> Result<f64> {
    if t == 0.0 {
        let basis = product_basis(h, target.n_qubits)?;
        return state_fidelity(&equal_weight_input(&basis)?, &ideal_output(&basis, target)?);
    }
    if !t.is_finite() || t < 0.0 {
        return Err(invalid("t", format!("evaluation time {t} must be non-negative")));
    }
    let grid = TimeGrid::new(0.0, t, 2)?;
    let curve = dissipative_gate_fidelity_curve(h, collapse, target, &grid)?;
    Ok(curve.values[1])
}

/// Channel analogue of `|tr(U† U_target)|/2^N`: the square root of the
/// process fidelity `(1/d²) Σ_jk <j|U_t† E(|j><k|) U_t|k>`. Reduces to the
/// unitary definition when there is no decay.
pub fn process_gate_fidelity(
    h: &Operator,
    collapse: &[Operator],
    target: &GateTarget,
    t: f64,
) -> Result<f64> {
    let basis = product_basis(h, target.n_qubits)?;
    let idx = basis.computational_indices()?;
    let d = idx.len();
    let dim = basis.dim();
    let u: Vec<C64> = (0..d).map(|k| target.matrix.get(k, k)).collect();
    if (0..d).any(|j| (0..d).any(|k| j != k && target.matrix.get(j, k) != ZERO)) {
        return Err(invalid("target", "process fidelity is implemented for diagonal targets"));
    }
    let mut total = ZERO;
    for (j, &ij) in idx.iter().enumerate() {
        for (k, &ik) in idx.iter().enumerate() {
            let mut x = CMatrix::zeros(dim, dim);
            x[(ij, ik)] = ONE;
            let out = evolve_lindblad_raw(h, collapse, &x, t)?;
            total += u[j].conj() * u[k] * out[(ij, ik)];
        }
    }
    let f_pro = total.re / (d * d) as f64;
    Ok(f_pro.max(0.0).sqrt())
}

/// Single-qubit phase: the circular mean of the diagonal phases on the
/// strings with exactly one qubit in `|1>`, reported in `[0, 2π)`.
pub fn extract_alpha(gate: &ExtractedGate) -> Result<f64> {
    let dominance = gate.leakage + gate.max_off_diagonal();
    if dominance >= DIAGONAL_DOMINANCE_LIMIT {
        return Err(Error::NotDiagonalDominant(dominance));
    }
    let n = gate.n_qubits;
    let sum: C64 = (0..n)
        .map(|q| 1usize << (n - 1 - q))
        .map(|k| {
            let z = gate.matrix.get(k, k);
            z / z.norm()
        })
        .sum();
    Ok(crate::perturbation::wrap_phase(sum.arg()))
}

//! Effective models: elimination of the optical level, the Raman coupling
//! between `|1..1>` and `|r..r>`, and the GHZ / gate timing rules.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dynamics::Spectral;
use crate::error::{invalid, Error, Result};
use crate::model::{build_full_h, build_ladder_h, resonance_u, Interaction, PhysParams};
use crate::qkernel::Operator;

/// Second-order coefficients from eliminating `|p>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EliminationResult {
    /// `Ω_R Ω_B / Δ`
    pub omega_eff: f64,
    /// Stark shift of `|1>`, `Ω_R² / Δ`.
    pub shift_1: f64,
    /// Stark shift of `|r>`, `Ω_B² / Δ`.
    pub shift_r: f64,
    /// `Δ >= 10 max(Ω_R, Ω_B)`.
    pub far_detuned: bool,
}

pub fn eliminate_optical(params: &PhysParams) -> Result<EliminationResult> {
    let d = params.delta_big;
    if d == 0.0 || !d.is_finite() {
        return Err(invalid("delta_big", "one-photon detuning must be finite and nonzero"));
    }
    Ok(EliminationResult {
        omega_eff: params.omega_r * params.omega_b / d,
        shift_1: params.omega_r.powi(2) / d,
        shift_r: params.omega_b.powi(2) / d,
        far_detuned: d.abs() >= 10.0 * params.omega_r.abs().max(params.omega_b.abs()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelSource {
    ClosedForm,
    Numeric,
}

/// Two-state Raman model `shift I + g_eff σ_x` on `{|1..1>, |r..r>}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveModel {
    pub g_eff: f64,
    pub shift: f64,
    pub n_atoms: usize,
    pub delta: f64,
    pub source: ModelSource,
}

impl EffectiveModel {
    pub fn hamiltonian(&self) -> Result<Operator> {
        crate::model::raman_pair_h(self.n_atoms, self.shift, self.g_eff)
    }
}

/// Minimum combined weight on `|N^0>`, `|N^N>` for a dressed-pair eigenstate.
pub const DRESSED_PAIR_OVERLAP: f64 = 0.8;

fn check_regime(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 2.0 {
        return Err(Error::RegimeViolation(format!(
            "dispersive regime needs δ > 2Ω, got δ = {delta}Ω"
        )));
    }
    Ok(())
}

/// Effective Raman model on the resonant ladder. Three atoms use the closed
/// form `g = 6/δ²`, `shift = 3/δ`; other sizes go through
/// [`numeric_effective_model`].
pub fn effective_model(n_atoms: usize, delta: f64) -> Result<EffectiveModel> {
    check_regime(delta)?;
    if n_atoms == 3 {
        return Ok(EffectiveModel {
            g_eff: 6.0 / (delta * delta),
            shift: 3.0 / delta,
            n_atoms,
            delta,
            source: ModelSource::ClosedForm,
        });
    }
    numeric_effective_model(n_atoms, delta)
}

/// Diagonalizes the resonant ladder and takes the two eigenstates living
/// mostly on `|N^0>` and `|N^N>`: `g_eff` is half their splitting and
/// `shift` their mean energy.
pub fn numeric_effective_model(n_atoms: usize, delta: f64) -> Result<EffectiveModel> {
    check_regime(delta)?;
    let u = resonance_u(n_atoms, delta)?;
    let h = build_ladder_h(n_atoms, delta, u)?;
    let spectral = Spectral::new(&h)?;
    let v = spectral.eigenvectors();
    let mut weights: Vec<(f64, f64)> = spectral
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &w)| (v[(0, k)].norm_sqr() + v[(n_atoms, k)].norm_sqr(), w))
        .collect();
    weights.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (a, b) = (weights[0], weights[1]);
    if a.0 <= DRESSED_PAIR_OVERLAP || b.0 <= DRESSED_PAIR_OVERLAP {
        return Err(Error::RegimeViolation(format!(
            "no dressed pair at N = {n_atoms}, δ = {delta}: overlaps {:.3}, {:.3}",
            a.0, b.0
        )));
    }
    Ok(EffectiveModel {
        g_eff: 0.5 * (a.1 - b.1).abs(),
        shift: 0.5 * (a.1 + b.1),
        n_atoms,
        delta,
        source: ModelSource::Numeric,
    })
}

fn check_coupling(model: &EffectiveModel) -> Result<()> {
    if model.g_eff.is_nan() || model.g_eff <= 0.0 {
        return Err(invalid("g_eff", format!("effective coupling {} must be positive", model.g_eff)));
    }
    Ok(())
}

/// `(k + 1/4) π / g_eff`: the k-th time at which `|1..1>` has evolved into
/// an equal-weight GHZ superposition.
pub fn ghz_time(model: &EffectiveModel, k: u32) -> Result<f64> {
    check_coupling(model)?;
    Ok((k as f64 + 0.25) * PI / model.g_eff)
}

/// `π / g_eff`: one full Rabi cycle of `|1..1>` through `|r..r>`.
pub fn gate_time(model: &EffectiveModel) -> Result<f64> {
    check_coupling(model)?;
    Ok(PI / model.g_eff)
}

/// Single-qubit phase `α = -πδ/6` acquired at the three-atom gate time,
/// reported in `[0, 2π)`.
pub fn predicted_alpha(delta: f64) -> f64 {
    wrap_phase(-PI * delta / 6.0)
}

/// Maps a phase into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w >= TAU - 1e-15 {
        0.0
    } else {
        w
    }
}

/// Shortest angular distance between two phases.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}

/// Four-level parameters whose dressed energies match an eliminated model
/// with absorbed Stark shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct FullCalibration {
    pub params: PhysParams,
    /// Half the dressed-pair splitting of the calibrated four-level model.
    pub g_eff: f64,
}

fn real_matrix(op: &Operator) -> DMatrix<f64> {
    DMatrix::from_fn(op.dim(), op.dim(), |i, j| op.get(i, j).re)
}

/// Energy of the `|r>`-like minus the `|1>`-like dressed state of one
/// four-level atom.
fn single_atom_splitting(base: &PhysParams, delta_bare: f64) -> Result<f64> {
    let mut p = base.clone();
    p.n_atoms = 1;
    p.delta = delta_bare;
    p.interaction = Interaction::Uniform(0.0);
    let (h, _) = build_full_h(&p)?;
    let eig = SymmetricEigen::new(real_matrix(&h));
    let pick = |level: usize| {
        (0..4)
            .max_by(|&a, &b| eig.eigenvectors[(level, a)].abs().total_cmp(&eig.eigenvectors[(level, b)].abs()))
            .map(|k| eig.eigenvalues[k])
            .expect("4 eigenvalues")
    };
    // ordering (0, 1, p, r)
    Ok(pick(3) - pick(1))
}

/// Half the splitting of the eigenpair with most weight on `|1..1>`, `|r..r>`.
fn dressed_pair_half_splitting(params: &PhysParams) -> Result<f64> {
    let (h, _) = build_full_h(params)?;
    let basis = crate::qkernel::AtomBasis::four_level(params.n_atoms)?;
    let i_ground = basis.uniform_index(crate::qkernel::Level::One).expect("|1> present");
    let i_excited = basis.uniform_index(crate::qkernel::Level::R).expect("|r> present");
    let eig = SymmetricEigen::new(real_matrix(&h));
    let mut weights: Vec<(f64, f64)> = (0..h.dim())
        .map(|k| {
            let v = &eig.eigenvectors;
            (v[(i_ground, k)].powi(2) + v[(i_excited, k)].powi(2), eig.eigenvalues[k])
        })
        .collect();
    weights.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(0.5 * (weights[0].1 - weights[1].1).abs())
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RegimeViolation(format!(
            "calibration root not bracketed in [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Chooses the bare two-photon detuning and pair interaction of the
/// four-level model so that it reproduces the shift-absorbed eliminated
/// model at detuning `delta_eff` with resonant interaction.
///
/// The bare detuning makes the single-atom dressed `|r>`-`|1>` splitting
/// equal to the eliminated value `-sqrt(δ² + 4Ω_eff²)`. The bare interaction
/// then minimizes the `|1..1>`/`|r..r>` dressed splitting, restoring the
/// resonance that light shifts of the doubly excited states would otherwise
/// detune.
pub fn calibrate_full_model(
    n_atoms: usize,
    omega_r: f64,
    omega_b: f64,
    delta_big: f64,
    delta_eff: f64,
) -> Result<FullCalibration> {
    let u_eff = resonance_u(n_atoms, delta_eff)?;
    let mut base = PhysParams::ideal(n_atoms, delta_eff, u_eff);
    base.omega_r = omega_r;
    base.omega_b = omega_b;
    base.delta_big = delta_big;
    let elim = eliminate_optical(&base)?;
    if !elim.far_detuned {
        return Err(Error::RegimeViolation("optical level is not far detuned".into()));
    }
    let target = -(delta_eff.powi(2) + 4.0 * elim.omega_eff.powi(2)).sqrt() * delta_eff.signum();
    let guess = delta_eff + elim.shift_r - elim.shift_1;
    let width = 0.25 * delta_big.abs().min(10.0 * (1.0 + guess.abs()));
    let delta_bare = bisect(
        |x| Ok(single_atom_splitting(&base, x)? - target),
        guess - width,
        guess + width,
        1e-12 * (1.0 + guess.abs()),
    )?;
    base.delta = delta_bare;
    let u_bare = golden_min(
        |u| {
            let mut p = base.clone();
            p.interaction = Interaction::Uniform(u);
            dressed_pair_half_splitting(&p)
        },
        0.8 * u_eff,
        1.2 * u_eff,
        1e-9 * u_eff.abs(),
    )?;
    base.interaction = Interaction::Uniform(u_bare);
    let g_eff = dressed_pair_half_splitting(&base)?;
    Ok(FullCalibration { params: base, g_eff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experimental_elimination() {
        // Frequencies in units of 2π MHz.
        let mut p = PhysParams::ideal(1, 0.0, 0.0);
        p.omega_r = 25.0;
        p.omega_b = 300.0;
        p.delta_big = 3000.0;
        let e = eliminate_optical(&p).unwrap();
        assert!((e.omega_eff - 2.5).abs() < 1e-12);
        assert!(e.far_detuned);
        let gamma_over_omega = 4.8e-3 / e.omega_eff;
        assert!((gamma_over_omega - 0.00192).abs() < 1e-12);
    }

    #[test]
    fn symmetric_elimination() {
        let mut p = PhysParams::ideal(1, 0.0, 0.0);
        p.omega_r = 3.0;
        p.omega_b = 3.0;
        p.delta_big = 90.0;
        let e = eliminate_optical(&p).unwrap();
        assert_eq!(e.omega_eff, 0.1);
        assert_eq!(e.shift_1, 0.1);
        assert_eq!(e.shift_r, 0.1);
        p.delta_big = 20.0;
        assert!(!eliminate_optical(&p).unwrap().far_detuned);
        p.delta_big = 0.0;
        assert!(eliminate_optical(&p).is_err());
    }

    #[test]
    fn closed_form_three_atoms() {
        let m = effective_model(3, 20.0).unwrap();
        assert!((m.g_eff - 0.015).abs() < 1e-15);
        assert!((m.shift - 0.15).abs() < 1e-15);
        assert_eq!(m.source, ModelSource::ClosedForm);
    }

    #[test]
    fn numeric_path_approaches_closed_form() {
        let num = numeric_effective_model(3, 40.0).unwrap();
        let closed = effective_model(3, 40.0).unwrap();
        assert!((num.g_eff / closed.g_eff - 1.0).abs() <= 0.05);
        assert!((num.shift / closed.shift - 1.0).abs() <= 0.05);
    }

    #[test]
    fn regime_violation() {
        assert!(matches!(effective_model(3, 2.0), Err(Error::RegimeViolation(_))));
        assert!(matches!(effective_model(4, 1.0), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn timing_rules() {
        let m = effective_model(3, 20.0).unwrap();
        let t0 = ghz_time(&m, 0).unwrap();
        assert!((t0 - PI * 400.0 / 24.0).abs() < 1e-12);
        assert!((t0 - 52.36).abs() < 5e-3);
        let t1 = ghz_time(&m, 1).unwrap();
        assert!((t1 - 1.25 * PI / m.g_eff).abs() < 1e-12);
        assert!((t1 - t0 - PI / m.g_eff).abs() < 1e-12);
        let m10 = effective_model(3, 10.0).unwrap();
        assert!((ghz_time(&m10, 0).unwrap() - 13.09).abs() < 5e-3);
        let m12 = effective_model(3, 12.0).unwrap();
        assert!((gate_time(&m12).unwrap() - 24.0 * PI).abs() < 1e-12);
        assert!((gate_time(&m10).unwrap() - 100.0 * PI / 6.0).abs() < 1e-12);
        let bad = EffectiveModel { g_eff: 0.0, ..m };
        assert!(ghz_time(&bad, 0).is_err());
        assert!(gate_time(&bad).is_err());
    }

    #[test]
    fn alpha_prediction() {
        assert!(phase_distance(predicted_alpha(12.0), 0.0) < 1e-12);
        assert!((predicted_alpha(6.0) - PI).abs() < 1e-12);
        assert!((predicted_alpha(10.0) - PI / 3.0).abs() < 1e-12);
        assert!((0.0..TAU).contains(&predicted_alpha(-123.4)));
    }

    #[test]
    fn phase_helpers() {
        assert!((phase_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(wrap_phase(TAU), 0.0);
        assert!((wrap_phase(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
    }
}

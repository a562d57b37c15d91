//! Hamiltonians, collapse operators and gate targets for the driven
//! Rydberg-atom register.
//!
//! Every frequency is measured in units of the effective two-photon Rabi
//! frequency `Ω_eff = Ω_R Ω_B / Δ`. Pairwise interaction energies are summed
//! over unordered pairs, so `k` excited atoms with uniform `U` carry
//! `C(k, 2) U`.

use crate::error::{invalid, Error, Result};
use crate::qkernel::{
    binomial, embed, transition, AtomBasis, BasisTag, CMatrix, Level, Operator, C64, ZERO,
};

/// Laser ratios of the experimental estimate, in units of `Ω_eff`:
/// `Ω_R = 2π·25 MHz`, `Ω_B = 2π·300 MHz`, `Δ = 10 Ω_B`, giving `Ω_eff = 2π·2.5 MHz`.
pub const EXPERIMENTAL_OMEGA_R: f64 = 10.0;
pub const EXPERIMENTAL_OMEGA_B: f64 = 120.0;
pub const EXPERIMENTAL_DELTA_BIG: f64 = 1200.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Interaction {
    /// Equal `U` for every pair.
    Uniform(f64),
    /// Symmetric `u_ij` with zero diagonal.
    Pairwise(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysParams {
    pub omega_r: f64,
    pub omega_b: f64,
    /// One-photon detuning Δ of the optical level.
    pub delta_big: f64,
    /// Two-photon detuning δ.
    pub delta: f64,
    pub interaction: Interaction,
    pub gamma_p: f64,
    pub gamma_r: f64,
    /// Rydberg decay into `|0>`.
    pub gamma0: f64,
    /// Rydberg decay into `|1>`.
    pub gamma1: f64,
    /// Fraction of optical-level decay that lands in `|0>`; the rest goes to `|1>`.
    pub p_branch_to_zero: f64,
    pub n_atoms: usize,
}

impl PhysParams {
    /// Decay-free register with the experimental laser ratios, so that
    /// `Ω_eff = 1`.
    pub fn ideal(n_atoms: usize, delta: f64, u: f64) -> Self {
        Self {
            omega_r: EXPERIMENTAL_OMEGA_R,
            omega_b: EXPERIMENTAL_OMEGA_B,
            delta_big: EXPERIMENTAL_DELTA_BIG,
            delta,
            interaction: Interaction::Uniform(u),
            gamma_p: 0.0,
            gamma_r: 0.0,
            gamma0: 0.0,
            gamma1: 0.0,
            p_branch_to_zero: 0.5,
            n_atoms,
        }
    }

    /// Rydberg decay `gamma` split equally between `|0>` and `|1>`.
    pub fn with_rydberg_decay(mut self, gamma: f64) -> Self {
        self.gamma_r = gamma;
        self.gamma0 = 0.5 * gamma;
        self.gamma1 = 0.5 * gamma;
        self
    }

    pub fn omega_eff(&self) -> f64 {
        self.omega_r * self.omega_b / self.delta_big
    }

    pub fn pair_u(&self, i: usize, j: usize) -> f64 {
        match &self.interaction {
            Interaction::Uniform(u) => *u,
            Interaction::Pairwise(m) => m[i][j],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(invalid("n_atoms", "must be at least 1"));
        }
        let finite = [
            ("omega_r", self.omega_r),
            ("omega_b", self.omega_b),
            ("delta_big", self.delta_big),
            ("delta", self.delta),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("{v} is not finite")));
            }
        }
        let rates = [
            ("gamma_p", self.gamma_p),
            ("gamma_r", self.gamma_r),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("rate {v} must be finite and non-negative")));
            }
        }
        if (self.gamma0 + self.gamma1 - self.gamma_r).abs() > 1e-12 {
            return Err(invalid(
                "gamma_r",
                format!("branches {} + {} do not sum to {}", self.gamma0, self.gamma1, self.gamma_r),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_branch_to_zero) {
            return Err(invalid("p_branch_to_zero", "must lie in [0, 1]"));
        }
        match &self.interaction {
            Interaction::Uniform(u) if !u.is_finite() => Err(invalid("u", "not finite")),
            Interaction::Uniform(_) => Ok(()),
            Interaction::Pairwise(m) => {
                let n = self.n_atoms;
                if m.len() != n || m.iter().any(|row| row.len() != n) {
                    return Err(invalid("u", format!("pair matrix must be {n}x{n}")));
                }
                for (i, row) in m.iter().enumerate() {
                    if row[i] != 0.0 {
                        return Err(invalid("u", "pair matrix diagonal must be zero"));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if v != m[j][i] || !v.is_finite() {
                            return Err(invalid("u", "pair matrix must be finite and symmetric"));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Dispersion coefficient and interatomic distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionSpec {
    pub c3: f64,
    pub r: f64,
}

/// Dipole-dipole interaction `C3 / r^3`.
pub fn rydberg_u(spec: InteractionSpec) -> Result<f64> {
    if spec.r.is_nan() || spec.r <= 0.0 {
        return Err(invalid("r", format!("distance {} must be positive", spec.r)));
    }
    Ok(spec.c3 / spec.r.powi(3))
}

/// Interaction that puts `|1..1>` and `|r..r>` on resonance:
/// `C(N,2) U = N δ`, i.e. `U = 2δ / (N - 1)`.
pub fn resonance_u(n_atoms: usize, delta: f64) -> Result<f64> {
    if n_atoms < 2 {
        return Err(invalid("n_atoms", "resonance condition needs at least 2 atoms"));
    }
    Ok(n_atoms as f64 * delta / binomial(n_atoms, 2))
}

fn sum_over_atoms(local: &Operator, basis: &AtomBasis) -> Result<Operator> {
    let mut total = Operator::zeros(BasisTag::Product(basis.clone()), basis.dim())?;
    for i in 0..basis.n_atoms() {
        total = total.try_add(&embed(local, i, basis)?)?;
    }
    Ok(total)
}

/// Diagonal `Σ_{i<j} U_ij |rr><rr|_{ij}` in `basis`.
fn pair_interaction(params: &PhysParams, basis: &AtomBasis) -> Result<Operator> {
    let dim = basis.dim();
    let mut diag = vec![ZERO; dim];
    for (idx, slot) in diag.iter_mut().enumerate() {
        let config = basis.config_of(idx);
        let excited: Vec<usize> = (0..config.len()).filter(|&i| config[i] == Level::R).collect();
        let mut e = 0.0;
        for (a, &i) in excited.iter().enumerate() {
            for &j in &excited[a + 1..] {
                e += params.pair_u(i, j);
            }
        }
        *slot = C64::new(e, 0.0);
    }
    Operator::diagonal(BasisTag::Product(basis.clone()), &diag)
}

fn local_op(basis: &AtomBasis, terms: &[(Level, Level, f64)]) -> Result<Operator> {
    let single = basis.with_atoms(1)?;
    let n = single.n_levels();
    let mut acc = Operator::zeros(BasisTag::Product(single), n)?;
    for &(to, from, coeff) in terms {
        if coeff != 0.0 {
            acc = acc.try_add(&transition(basis, to, from)?.scale(C64::new(coeff, 0.0)))?;
        }
    }
    Ok(acc)
}

/// Four-level rotating-frame Hamiltonian on `{0,1,p,r}^N` together with the
/// collapse operators for optical and Rydberg decay.
pub fn build_full_h(params: &PhysParams) -> Result<(Operator, Vec<Operator>)> {
    params.validate()?;
    let basis = AtomBasis::four_level(params.n_atoms)?;
    let local = local_op(
        &basis,
        &[
            (Level::P, Level::P, -params.delta_big),
            (Level::R, Level::R, -params.delta),
            (Level::One, Level::P, params.omega_r),
            (Level::P, Level::One, params.omega_r),
            (Level::P, Level::R, params.omega_b),
            (Level::R, Level::P, params.omega_b),
        ],
    )?;
    let h = sum_over_atoms(&local, &basis)?.try_add(&pair_interaction(params, &basis)?)?;
    let collapse = collapse_ops(params, &basis)?;
    Ok((h, collapse))
}

/// Three-level Hamiltonian on `{0,1,r}^N` after eliminating `|p>`.
///
/// With `absorb_shifts` the Stark terms are dropped and `params.delta` is read
/// as the shift-corrected two-photon detuning.
pub fn build_eliminated_h(params: &PhysParams, absorb_shifts: bool) -> Result<Operator> {
    let basis = AtomBasis::three_level(params.n_atoms)?;
    build_eliminated_h_in(params, absorb_shifts, &basis)
}

/// [`build_eliminated_h`] in an arbitrary per-atom basis containing `|1>`, `|r>`.
pub fn build_eliminated_h_in(
    params: &PhysParams,
    absorb_shifts: bool,
    basis: &AtomBasis,
) -> Result<Operator> {
    params.validate()?;
    if params.delta_big == 0.0 {
        return Err(invalid("delta_big", "one-photon detuning must be nonzero"));
    }
    if basis.n_atoms() != params.n_atoms {
        return Err(Error::DimensionMismatch { expected: params.n_atoms, found: basis.n_atoms() });
    }
    let omega_eff = params.omega_eff();
    let (shift_r, shift_1) = if absorb_shifts {
        (0.0, 0.0)
    } else {
        (params.omega_b.powi(2) / params.delta_big, params.omega_r.powi(2) / params.delta_big)
    };
    let local = local_op(
        basis,
        &[
            (Level::R, Level::R, -params.delta + shift_r),
            (Level::One, Level::One, shift_1),
            (Level::One, Level::R, omega_eff),
            (Level::R, Level::One, omega_eff),
        ],
    )?;
    sum_over_atoms(&local, basis)?.try_add(&pair_interaction(params, basis)?)
}

/// Tridiagonal Hamiltonian in the symmetric Dicke ladder `|N^k>`, k = 0..=N.
///
/// Diagonal `C(k,2) U - k δ`; the coupling between `|N^k>` and `|N^{k+1}>`
/// is the collective matrix element `sqrt((k+1)(N-k))` (Ω = 1).
pub fn build_ladder_h(n_atoms: usize, delta: f64, u: f64) -> Result<Operator> {
    if n_atoms < 1 {
        return Err(invalid("n_atoms", "ladder needs at least 1 atom"));
    }
    let n = n_atoms;
    let mat = CMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            C64::new(binomial(i, 2) * u - i as f64 * delta, 0.0)
        } else if i + 1 == j || j + 1 == i {
            let k = i.min(j);
            C64::new((((k + 1) * (n - k)) as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Operator::new(BasisTag::Dicke { n_atoms }, mat)
}

/// Two-state Raman model for three atoms on `{|111>, |rrr>}`:
/// `(3/δ) I + (6/δ²) σ_x`.
pub fn build_effective_h(delta: f64) -> Result<Operator> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(invalid("delta", "effective model needs a finite nonzero detuning"));
    }
    raman_pair_h(3, 3.0 / delta, 6.0 / (delta * delta))
}

/// `shift I + coupling σ_x` on `{|1..1>, |r..r>}`.
pub fn raman_pair_h(n_atoms: usize, shift: f64, coupling: f64) -> Result<Operator> {
    Operator::from_real_rows(
        BasisTag::RamanPair { n_atoms },
        &[&[shift, coupling], &[coupling, shift]],
    )
}

/// Per-atom decay channels: `sqrt(γ0)|0><r|`, `sqrt(γ1)|1><r|`, and when `basis`
/// carries `|p>`, the optical branches into `|0>` and `|1>`. Zero-rate
/// channels are omitted.
pub fn collapse_ops(params: &PhysParams, basis: &AtomBasis) -> Result<Vec<Operator>> {
    params.validate()?;
    let mut channels: Vec<(Level, Level, f64)> = vec![
        (Level::Zero, Level::R, params.gamma0),
        (Level::One, Level::R, params.gamma1),
    ];
    if basis.contains(Level::P) {
        channels.push((Level::Zero, Level::P, params.gamma_p * params.p_branch_to_zero));
        channels.push((Level::One, Level::P, params.gamma_p * (1.0 - params.p_branch_to_zero)));
    }
    let mut ops = Vec::new();
    for atom in 0..basis.n_atoms() {
        for &(to, from, rate) in &channels {
            if rate == 0.0 {
                continue;
            }
            let jump = transition(basis, to, from)?.scale(C64::new(rate.sqrt(), 0.0));
            ops.push(embed(&jump, atom, basis)?);
        }
    }
    Ok(ops)
}

/// `H - (i/2) Σ L†L`, the no-jump generator used for cross-checks against
/// the master equation.
pub fn non_hermitian_h(h: &Operator, collapse: &[Operator]) -> Result<Operator> {
    let mut out = h.clone();
    for l in collapse {
        let ldl = l.adjoint().try_mul(l)?;
        out = out.try_add(&ldl.scale(C64::new(0.0, -0.5)))?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateTarget {
    pub n_qubits: usize,
    pub alpha: f64,
    pub matrix: Operator,
}

/// Diagonal target `e^{i m α}` on strings with `m` ones, with an extra sign
/// flip on the all-ones string.
pub fn build_gate_target(n_qubits: usize, alpha: f64) -> Result<GateTarget> {
    if n_qubits < 2 {
        return Err(invalid("n_qubits", "controlled-phase target needs at least 2 qubits"));
    }
    if !alpha.is_finite() {
        return Err(invalid("alpha", "phase must be finite"));
    }
    let dim = 1usize << n_qubits;
    let diag: Vec<C64> = (0..dim)
        .map(|bits| {
            let m = bits.count_ones() as usize;
            let phase = C64::from_polar(1.0, m as f64 * alpha);
            if m == n_qubits {
                -phase
            } else {
                phase
            }
        })
        .collect();
    let matrix = Operator::diagonal(BasisTag::Computational { n_qubits }, &diag)?;
    Ok(GateTarget { n_qubits, alpha, matrix })
}

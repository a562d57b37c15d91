//! Dense complex linear algebra over multi-atom Hilbert spaces.
//!
//! Product-basis ordering: the leftmost atom is the most significant digit
//! of the flat index, and each atom's digit is the position of its level in
//! [`AtomBasis::levels`]. With levels `{|1>, |r>}` and three atoms the flat
//! index of `|1 r 1>` is therefore `0*4 + 1*2 + 0 = 2`.
//!
//! All frequencies are in units of the effective Rabi frequency (Ω = 1) and
//! all times in units of 1/Ω.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance used when validating user-supplied states.
pub const STATE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Single-atom level. The declaration order is the canonical ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    /// Qubit level `|0>`, also a decay sink.
    Zero,
    /// Qubit level `|1>`, driven towards the Rydberg state.
    One,
    /// Intermediate optical level `|p>`.
    P,
    /// Rydberg level `|r>`.
    R,
}

impl Level {
    pub fn label(self) -> char {
        match self {
            Level::Zero => '0',
            Level::One => '1',
            Level::P => 'p',
            Level::R => 'r',
        }
    }
}

/// Per-atom level set shared by `n_atoms` identical atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomBasis {
    levels: Vec<Level>,
    n_atoms: usize,
}

impl AtomBasis {
    /// `levels` must be in canonical order without repeats and contain both
    /// `|1>` and `|r>`.
    pub fn new(levels: Vec<Level>, n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidBasis("n_atoms must be at least 1".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBasis(format!(
                "levels {levels:?} are not in canonical (0, 1, p, r) order without repeats"
            )));
        }
        if !levels.contains(&Level::One) || !levels.contains(&Level::R) {
            return Err(Error::InvalidBasis("levels must include |1> and |r>".into()));
        }
        Ok(Self { levels, n_atoms })
    }

    /// `{|1>, |r>}` per atom.
    pub fn two_level(n_atoms: usize) -> Result<Self> {
        Self::new(vec![Level::One, Level::R], n_atoms)
    }

    /// `{|0>, |1>, |r>}` per atom.
    pub fn three_level(n_atoms: usize) -> Result<Self> {
        Self::new(vec![Level::Zero, Level::One, Level::R], n_atoms)
    }

    /// `{|0>, |1>, |p>, |r>}` per atom.
    pub fn four_level(n_atoms: usize) -> Result<Self> {
        Self::new(vec![Level::Zero, Level::One, Level::P, Level::R], n_atoms)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn contains(&self, level: Level) -> bool {
        self.levels.contains(&level)
    }

    pub fn dim(&self) -> usize {
        self.n_levels().pow(self.n_atoms as u32)
    }

    pub fn local_index(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }

    /// Same level set, different atom number.
    pub fn with_atoms(&self, n_atoms: usize) -> Result<Self> {
        Self::new(self.levels.clone(), n_atoms)
    }

    /// Flat index of a product configuration, leftmost atom most significant.
    pub fn index_of(&self, config: &[Level]) -> Option<usize> {
        if config.len() != self.n_atoms {
            return None;
        }
        let base = self.n_levels();
        config
            .iter()
            .try_fold(0usize, |acc, &l| Some(acc * base + self.local_index(l)?))
    }

    pub fn config_of(&self, mut index: usize) -> Vec<Level> {
        let base = self.n_levels();
        let mut config = vec![self.levels[0]; self.n_atoms];
        for slot in config.iter_mut().rev() {
            *slot = self.levels[index % base];
            index /= base;
        }
        config
    }

    /// Index of the configuration with every atom in `level`.
    pub fn uniform_index(&self, level: Level) -> Option<usize> {
        self.index_of(&vec![level; self.n_atoms])
    }

    /// Product-basis indices of the computational strings `{0,1}^N`, listed
    /// in computational order (leftmost qubit most significant).
    pub fn computational_indices(&self) -> Result<Vec<usize>> {
        if !self.contains(Level::Zero) {
            return Err(Error::InvalidBasis(format!("{self} has no |0> level")));
        }
        let n = self.n_atoms;
        Ok((0usize..(1 << n))
            .map(|bits| {
                let config: Vec<Level> = (0..n)
                    .map(|i| if bits >> (n - 1 - i) & 1 == 1 { Level::One } else { Level::Zero })
                    .collect();
                self.index_of(&config).expect("levels present")
            })
            .collect())
    }
}

impl fmt::Display for AtomBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: String = self.levels.iter().map(|l| l.label()).collect();
        write!(f, "{{{labels}}}^{}", self.n_atoms)
    }
}

/// Identifies the basis an operator or state is written in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasisTag {
    /// Product basis over per-atom levels.
    Product(AtomBasis),
    /// Symmetric Dicke ladder `|N^k>`, k = 0..=N excitations.
    Dicke { n_atoms: usize },
    /// Two-state effective model on `{|1..1>, |r..r>}`.
    RamanPair { n_atoms: usize },
    /// Computational qubit basis `{|0>, |1>}^N`.
    Computational { n_qubits: usize },
    /// No basis information; compatible with any basis of the same dimension.
    Unlabeled,
}

impl BasisTag {
    pub fn dim(&self) -> Option<usize> {
        match self {
            BasisTag::Product(b) => Some(b.dim()),
            BasisTag::Dicke { n_atoms } => Some(n_atoms + 1),
            BasisTag::RamanPair { .. } => Some(2),
            BasisTag::Computational { n_qubits } => Some(1usize << n_qubits),
            BasisTag::Unlabeled => None,
        }
    }

    pub(crate) fn compatible(&self, other: &BasisTag) -> bool {
        matches!(self, BasisTag::Unlabeled) || matches!(other, BasisTag::Unlabeled) || self == other
    }

    fn merge(&self, other: &BasisTag) -> BasisTag {
        if matches!(self, BasisTag::Unlabeled) {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Indices of the all-ground `|1..1>` and all-excited `|r..r>` states.
    pub fn extremal_indices(&self) -> Option<(usize, usize)> {
        match self {
            BasisTag::Product(b) => Some((b.uniform_index(Level::One)?, b.uniform_index(Level::R)?)),
            BasisTag::Dicke { n_atoms } => Some((0, *n_atoms)),
            BasisTag::RamanPair { .. } => Some((0, 1)),
            _ => None,
        }
    }

    pub fn n_atoms(&self) -> Option<usize> {
        match self {
            BasisTag::Product(b) => Some(b.n_atoms()),
            BasisTag::Dicke { n_atoms } | BasisTag::RamanPair { n_atoms } => Some(*n_atoms),
            BasisTag::Computational { n_qubits } => Some(*n_qubits),
            BasisTag::Unlabeled => None,
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Product(b) => write!(f, "product {b}"),
            BasisTag::Dicke { n_atoms } => write!(f, "dicke(N={n_atoms})"),
            BasisTag::RamanPair { n_atoms } => write!(f, "raman-pair(N={n_atoms})"),
            BasisTag::Computational { n_qubits } => write!(f, "computational(N={n_qubits})"),
            BasisTag::Unlabeled => write!(f, "unlabeled"),
        }
    }
}

fn check_compatible(a: &BasisTag, b: &BasisTag) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::BasisMismatch { left: a.to_string(), right: b.to_string() })
    }
}

/// Dense square complex matrix tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    tag: BasisTag,
    mat: CMatrix,
}

impl Operator {
    pub fn new(tag: BasisTag, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: mat.nrows().max(1), found: mat.ncols() });
        }
        if let Some(d) = tag.dim() {
            if d != mat.nrows() {
                return Err(Error::DimensionMismatch { expected: d, found: mat.nrows() });
            }
        }
        if !mat.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(Self { tag, mat })
    }

    pub fn unlabeled(mat: CMatrix) -> Result<Self> {
        Self::new(BasisTag::Unlabeled, mat)
    }

    pub fn from_real_rows(tag: BasisTag, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mat = CMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| C64::new(rows[i][j], 0.0));
        Self::new(tag, mat)
    }

    pub fn identity(tag: BasisTag, dim: usize) -> Result<Self> {
        Self::new(tag, CMatrix::identity(dim, dim))
    }

    pub fn zeros(tag: BasisTag, dim: usize) -> Result<Self> {
        Self::new(tag, CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(tag: BasisTag, diag: &[C64]) -> Result<Self> {
        Self::new(tag, CMatrix::from_diagonal(&CVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn with_tag(self, tag: BasisTag) -> Result<Self> {
        Self::new(tag, self.mat)
    }

    pub fn adjoint(&self) -> Self {
        Self { tag: self.tag.clone(), mat: self.mat.adjoint() }
    }

    /// Largest entrywise deviation `|A - A^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn try_mul(&self, rhs: &Operator) -> Result<Operator> {
        self.check_binary(rhs)?;
        Ok(Self { tag: self.tag.merge(&rhs.tag), mat: &self.mat * &rhs.mat })
    }

    pub fn try_add(&self, rhs: &Operator) -> Result<Operator> {
        self.check_binary(rhs)?;
        Ok(Self { tag: self.tag.merge(&rhs.tag), mat: &self.mat + &rhs.mat })
    }

    pub fn try_sub(&self, rhs: &Operator) -> Result<Operator> {
        self.check_binary(rhs)?;
        Ok(Self { tag: self.tag.merge(&rhs.tag), mat: &self.mat - &rhs.mat })
    }

    pub fn scale(&self, c: C64) -> Operator {
        Self { tag: self.tag.clone(), mat: &self.mat * c }
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(&self.mat * v)
    }

    fn check_binary(&self, rhs: &Operator) -> Result<()> {
        check_compatible(&self.tag, &rhs.tag)?;
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rhs.dim() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Mixed,
}

/// Pure state vector or density matrix, tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure { tag: BasisTag, amps: CVector },
    Mixed { tag: BasisTag, rho: CMatrix },
}

impl QuantumState {
    /// Normalized pure state; the norm must already be 1 within 1e-9.
    pub fn pure(tag: BasisTag, amps: CVector) -> Result<Self> {
        check_tag_dim(&tag, amps.len())?;
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state amplitudes"));
        }
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self::Pure { tag, amps })
    }

    /// Pure state from an arbitrary nonzero vector, rescaled to unit norm.
    pub fn normalized(tag: BasisTag, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Self::pure(tag, amps / C64::new(norm, 0.0))
    }

    /// Density matrix; Hermitian and unit-trace within 1e-9 with no eigenvalue
    /// below -1e-8.
    pub fn mixed(tag: BasisTag, rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), found: rho.ncols() });
        }
        check_tag_dim(&tag, rho.nrows())?;
        let op = Operator::new(BasisTag::Unlabeled, rho)?;
        let herm = op.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        let rho = op.into_matrix();
        let tr = rho.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self::Mixed { tag, rho })
    }

    pub(crate) fn pure_unchecked(tag: BasisTag, amps: CVector) -> Self {
        Self::Pure { tag, amps }
    }

    pub(crate) fn mixed_unchecked(tag: BasisTag, rho: CMatrix) -> Self {
        Self::Mixed { tag, rho }
    }

    /// Single product-basis configuration.
    pub fn product(basis: &AtomBasis, config: &[Level]) -> Result<Self> {
        let idx = basis.index_of(config).ok_or_else(|| {
            Error::InvalidState(format!("configuration {config:?} not representable in {basis}"))
        })?;
        Self::basis_state(BasisTag::Product(basis.clone()), basis.dim(), idx)
    }

    pub fn basis_state(tag: BasisTag, dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Self::pure(tag, amps)
    }

    pub fn kind(&self) -> StateKind {
        match self {
            Self::Pure { .. } => StateKind::Pure,
            Self::Mixed { .. } => StateKind::Mixed,
        }
    }

    pub fn tag(&self) -> &BasisTag {
        match self {
            Self::Pure { tag, .. } | Self::Mixed { tag, .. } => tag,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure { amps, .. } => amps.len(),
            Self::Mixed { rho, .. } => rho.nrows(),
        }
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match self {
            Self::Pure { amps, .. } => Some(amps),
            Self::Mixed { .. } => None,
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Self::Pure { amps, .. } => amps * amps.adjoint(),
            Self::Mixed { rho, .. } => rho.clone(),
        }
    }

    pub fn to_mixed(&self) -> QuantumState {
        Self::Mixed { tag: self.tag().clone(), rho: self.density() }
    }

    /// Probability of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        match self {
            Self::Pure { amps, .. } => amps[index].norm_sqr(),
            Self::Mixed { rho, .. } => rho[(index, index)].re,
        }
    }

    /// `<psi|psi>` for pure states, `tr(rho)` for mixed ones.
    pub fn norm_or_trace(&self) -> f64 {
        match self {
            Self::Pure { amps, .. } => amps.norm(),
            Self::Mixed { rho, .. } => rho.trace().re,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Pure { amps, .. } => amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            Self::Mixed { rho, .. } => rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }
}

fn check_tag_dim(tag: &BasisTag, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidState("empty state".into()));
    }
    match tag.dim() {
        Some(d) if d != dim => Err(Error::DimensionMismatch { expected: d, found: dim }),
        _ => Ok(()),
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Tensor product, row-major: `index = i_a * dim_b + i_b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mut out = CMatrix::zeros(da * db, da * db);
    for ia in 0..da {
        for ja in 0..da {
            let s = a.mat[(ia, ja)];
            if s == ZERO {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    out[(ia * db + ib, ja * db + jb)] = s * b.mat[(ib, jb)];
                }
            }
        }
    }
    let tag = match (&a.tag, &b.tag) {
        (BasisTag::Product(x), BasisTag::Product(y)) if x.levels == y.levels => x
            .with_atoms(x.n_atoms + y.n_atoms)
            .map(BasisTag::Product)
            .unwrap_or(BasisTag::Unlabeled),
        (BasisTag::Computational { n_qubits: x }, BasisTag::Computational { n_qubits: y }) => {
            BasisTag::Computational { n_qubits: x + y }
        }
        _ => BasisTag::Unlabeled,
    };
    Operator { tag, mat: out }
}

/// Single-atom operator `|to><from|` in the level set of `basis`.
pub fn transition(basis: &AtomBasis, to: Level, from: Level) -> Result<Operator> {
    let single = basis.with_atoms(1)?;
    let n = single.n_levels();
    let (i, j) = match (single.local_index(to), single.local_index(from)) {
        (Some(i), Some(j)) => (i, j),
        _ => {
            return Err(Error::InvalidBasis(format!(
                "levels {}/{} not in {single}",
                to.label(),
                from.label()
            )))
        }
    };
    let mut mat = CMatrix::zeros(n, n);
    mat[(i, j)] = ONE;
    Operator::new(BasisTag::Product(single), mat)
}

/// Places `local_op` on atom `atom_index` with identities elsewhere.
pub fn embed(local_op: &Operator, atom_index: usize, basis: &AtomBasis) -> Result<Operator> {
    let n_atoms = basis.n_atoms();
    if atom_index >= n_atoms {
        return Err(Error::AtomIndexOutOfRange { index: atom_index, n_atoms });
    }
    let d = basis.n_levels();
    if local_op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: local_op.dim() });
    }
    if let BasisTag::Product(b) = local_op.tag() {
        if b.levels() != basis.levels() {
            return Err(Error::BasisMismatch { left: b.to_string(), right: basis.to_string() });
        }
    }
    // Each product index decomposes as (left, local, right); the operator
    // acts only on the local digit.
    let right = d.pow((n_atoms - atom_index - 1) as u32);
    let left = d.pow(atom_index as u32);
    let dim = basis.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for l in 0..left {
        for (i, j) in (0..d).flat_map(|i| (0..d).map(move |j| (i, j))) {
            let v = local_op.mat[(i, j)];
            if v == ZERO {
                continue;
            }
            for r in 0..right {
                let row = (l * d + i) * right + r;
                let col = (l * d + j) * right + r;
                out[(row, col)] = v;
            }
        }
    }
    Operator::new(BasisTag::Product(basis.clone()), out)
}

/// Normalized symmetric Dicke states with k = 0..=N atoms in `|r>` and the
/// rest in `|1>`, written in any basis that contains both levels.
pub fn dicke_states(basis: &AtomBasis) -> Vec<QuantumState> {
    dicke_isometry(basis)
        .column_iter()
        .map(|c| QuantumState::pure_unchecked(BasisTag::Product(basis.clone()), c.into_owned()))
        .collect()
}

/// `dim x (N+1)` matrix whose columns are the Dicke states of [`dicke_states`].
pub fn dicke_isometry(basis: &AtomBasis) -> CMatrix {
    let n = basis.n_atoms();
    let mut p = CMatrix::zeros(basis.dim(), n + 1);
    let mut counts = vec![0usize; n + 1];
    let mut config = vec![Level::One; n];
    for mask in 0u64..(1u64 << n) {
        for (i, slot) in config.iter_mut().enumerate() {
            *slot = if mask >> (n - 1 - i) & 1 == 1 { Level::R } else { Level::One };
        }
        let k = mask.count_ones() as usize;
        let idx = basis.index_of(&config).expect("basis contains |1> and |r>");
        p[(idx, k)] = ONE;
        counts[k] += 1;
    }
    for (k, &count) in counts.iter().enumerate() {
        let s = 1.0 / (count as f64).sqrt();
        p.column_mut(k).iter_mut().for_each(|z| *z *= s);
    }
    p
}

/// Dicke states of a `{|1>, |r>}` basis. Any other level set is rejected.
pub fn symmetric_projector(basis: &AtomBasis) -> Result<Vec<QuantumState>> {
    if basis.levels() != [Level::One, Level::R] {
        return Err(Error::InvalidBasis(format!(
            "symmetric projector needs levels {{1, r}}, got {basis}"
        )));
    }
    Ok(dicke_states(basis))
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identities() {
        let i2 = Operator::identity(BasisTag::Unlabeled, 2).unwrap();
        let i4 = kron(&i2, &i2);
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn kron_diagonal_structure() {
        let d = Operator::diagonal(BasisTag::Unlabeled, &[c(2.0), c(-3.0)]).unwrap();
        let i2 = Operator::identity(BasisTag::Unlabeled, 2).unwrap();
        let k = kron(&d, &i2);
        let expect = [2.0, 2.0, -3.0, -3.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { c(expect[i]) } else { ZERO };
                assert_eq!(k.get(i, j), want);
            }
        }
    }

    #[test]
    fn kron_product_tags_merge() {
        let b1 = AtomBasis::three_level(1).unwrap();
        let b2 = AtomBasis::three_level(2).unwrap();
        let a = Operator::identity(BasisTag::Product(b1), 3).unwrap();
        let b = Operator::identity(BasisTag::Product(b2), 9).unwrap();
        assert_eq!(kron(&a, &b).tag(), &BasisTag::Product(AtomBasis::three_level(3).unwrap()));
    }

    #[test]
    fn embed_middle_atom_projector() {
        let basis = AtomBasis::two_level(3).unwrap();
        let proj = transition(&basis, Level::R, Level::R).unwrap();
        let op = embed(&proj, 1, &basis).unwrap();
        for idx in 0..basis.dim() {
            let config = basis.config_of(idx);
            let want = if config[1] == Level::R { ONE } else { ZERO };
            assert_eq!(op.get(idx, idx), want);
            for j in 0..basis.dim() {
                if j != idx {
                    assert_eq!(op.get(idx, j), ZERO);
                }
            }
        }
    }

    #[test]
    fn embed_single_atom_is_identity_map() {
        let basis = AtomBasis::three_level(1).unwrap();
        let op = transition(&basis, Level::One, Level::R).unwrap();
        let e = embed(&op, 0, &basis).unwrap();
        assert_eq!(e.matrix(), op.matrix());
    }

    #[test]
    fn counting_operator_on_all_excited() {
        let basis = AtomBasis::two_level(3).unwrap();
        let proj = transition(&basis, Level::R, Level::R).unwrap();
        let mut total = Operator::zeros(BasisTag::Product(basis.clone()), basis.dim()).unwrap();
        for i in 0..3 {
            total = total.try_add(&embed(&proj, i, &basis).unwrap()).unwrap();
        }
        let rrr = QuantumState::product(&basis, &[Level::R; 3]).unwrap();
        let out = total.apply(rrr.amplitudes().unwrap()).unwrap();
        let expect = rrr.amplitudes().unwrap() * c(3.0);
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn embed_rejects_bad_index() {
        let basis = AtomBasis::two_level(2).unwrap();
        let op = transition(&basis, Level::R, Level::One).unwrap();
        assert_eq!(
            embed(&op, 2, &basis),
            Err(Error::AtomIndexOutOfRange { index: 2, n_atoms: 2 })
        );
    }

    #[test]
    fn index_convention_leftmost_most_significant() {
        let basis = AtomBasis::two_level(3).unwrap();
        assert_eq!(basis.index_of(&[Level::One, Level::R, Level::One]), Some(2));
        assert_eq!(basis.index_of(&[Level::R, Level::One, Level::One]), Some(4));
        assert_eq!(basis.config_of(6), vec![Level::R, Level::R, Level::One]);
    }

    #[test]
    fn dicke_n3_single_excitation() {
        let basis = AtomBasis::two_level(3).unwrap();
        let states = symmetric_projector(&basis).unwrap();
        assert_eq!(states.len(), 4);
        let amps = states[1].amplitudes().unwrap();
        let s = 1.0 / 3f64.sqrt();
        for idx in 0..8 {
            let n_r = basis.config_of(idx).iter().filter(|&&l| l == Level::R).count();
            let want = if n_r == 1 { s } else { 0.0 };
            assert!((amps[idx] - c(want)).norm() < 1e-15, "idx {idx}");
        }
        let ground = states[0].amplitudes().unwrap();
        assert_eq!(ground[basis.uniform_index(Level::One).unwrap()], ONE);
    }

    #[test]
    fn dicke_n4_two_excitations_by_enumeration() {
        let basis = AtomBasis::two_level(4).unwrap();
        let states = symmetric_projector(&basis).unwrap();
        let amps = states[2].amplitudes().unwrap();
        let support: Vec<usize> = (0..16).filter(|&i| amps[i].norm() > 0.0).collect();
        let expected: Vec<usize> = (0..16u32).filter(|i| i.count_ones() == 2).map(|i| i as usize).collect();
        assert_eq!(support, expected);
        assert_eq!(support.len(), 6);
        assert!((amps.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_projector_rejects_other_levels() {
        let basis = AtomBasis::three_level(3).unwrap();
        assert!(matches!(symmetric_projector(&basis), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn basis_validation() {
        assert!(AtomBasis::new(vec![Level::R, Level::One], 2).is_err());
        assert!(AtomBasis::new(vec![Level::Zero, Level::P], 2).is_err());
        assert!(AtomBasis::new(vec![Level::One, Level::R], 0).is_err());
    }

    #[test]
    fn state_validation() {
        let tag = BasisTag::Unlabeled;
        assert!(QuantumState::pure(tag.clone(), CVector::from_vec(vec![c(1.0), c(1.0)])).is_err());
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = c(1.5);
        rho[(1, 1)] = c(-0.5);
        assert!(QuantumState::mixed(tag.clone(), rho).is_err());
        let rho = CMatrix::identity(2, 2) * c(0.5);
        assert!(QuantumState::mixed(tag, rho).is_ok());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}

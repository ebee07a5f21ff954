//! Dense density operators over small qubit registers.
//!
//! Register convention: qubit 0 is the most significant bit of the basis
//! index, so `|q0 q1 ... q(n-1)>` has index `q0 * 2^(n-1) + ... + q(n-1)`.
//! Circuits are laid out top-to-bottom on ascending qubit indices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension a dense operator may reach (12 qubits).
pub const DIM_CAP: usize = 1 << 12;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Bit of the basis index that encodes `qubit`.
#[inline]
pub(crate) fn bit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

/// Re-inserts `bit` for `qubit` into an index of the register with that qubit removed.
#[inline]
fn insert_bit(rest: usize, num_qubits: usize, qubit: usize, bit: usize) -> usize {
    let pos = num_qubits - 1 - qubit;
    let low = rest & ((1 << pos) - 1);
    ((rest >> pos) << (pos + 1)) | (bit << pos) | low
}

fn check_qubit(qubit: usize, num_qubits: usize) -> Result<()> {
    if qubit >= num_qubits {
        return Err(Error::QubitOutOfRange { qubit, num_qubits });
    }
    Ok(())
}

fn qubits_for_dim(rows: usize, cols: usize) -> Result<usize> {
    if rows != cols || rows == 0 || !rows.is_power_of_two() {
        return Err(Error::NotQubitOperator { rows, cols });
    }
    if rows > DIM_CAP {
        return Err(Error::DimensionCap { dim: rows, cap: DIM_CAP });
    }
    Ok(rows.trailing_zeros() as usize)
}

/// A trace-one, Hermitian, positive semidefinite operator on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Wraps a matrix after checking every density-operator invariant.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(matrix.nrows(), matrix.ncols())?;
        let rho = Self { num_qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by a trace-preserving computation.
    ///
    /// Trace and Hermiticity are asserted in debug builds only.
    pub(crate) fn from_raw(num_qubits: usize, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << num_qubits);
        let rho = Self { num_qubits, matrix };
        debug_assert!(
            (rho.trace() - 1.0).abs() < 1e-8,
            "trace drifted to {}",
            rho.trace()
        );
        debug_assert!(rho.hermiticity_deviation() < 1e-8);
        rho
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let dim = 1usize
            .checked_shl(num_qubits as u32)
            .filter(|d| *d <= DIM_CAP)
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap: DIM_CAP,
            })?;
        Ok(Self {
            num_qubits,
            matrix: DMatrix::identity(dim, dim) * re(1.0 / dim as f64),
        })
    }

    pub fn pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self {
            num_qubits: psi.num_qubits(),
            matrix: v * v.adjoint(),
        }
    }

    /// Projector onto a computational basis state given as bits, qubit 0 first.
    pub fn basis_projector(bits: &[u8]) -> Self {
        Self::pure(&PureState::basis(bits))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..=j {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_part(&self.matrix)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace and positivity at the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let min_eigenvalue = self.min_eigenvalue();
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(())
    }

    /// Affine combination `sum w_k rho_k` of operators on the same register.
    ///
    /// Weights must sum to one; individual weights may be negative, so the
    /// result is checked for positivity in debug builds only.
    pub fn mixture(terms: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptySequence)?.1;
        let mut acc = DMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in terms {
            if rho.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    left: first.dim(),
                    right: rho.dim(),
                });
            }
            acc += &rho.matrix * re(*w);
        }
        Ok(Self::from_raw(first.num_qubits, acc))
    }

    /// Maximum absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * re(0.5)
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len(), amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amplitudes / re(norm))
    }

    pub fn basis(bits: &[u8]) -> Self {
        let n = bits.len();
        let index = bits
            .iter()
            .fold(0usize, |acc, b| (acc << 1) | usize::from(*b & 1));
        let mut amplitudes = DVector::zeros(1 << n);
        amplitudes[index] = ONE;
        Self {
            num_qubits: n,
            amplitudes,
        }
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`; the Bell state `phi+` for two qubits.
    pub fn ghz(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[0] = re(std::f64::consts::FRAC_1_SQRT_2);
        amplitudes[dim - 1] = re(std::f64::consts::FRAC_1_SQRT_2);
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn bell(which: BellState) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match which {
            BellState::PhiPlus => [h, 0.0, 0.0, h],
            BellState::PhiMinus => [h, 0.0, 0.0, -h],
            BellState::PsiPlus => [0.0, h, h, 0.0],
            BellState::PsiMinus => [0.0, h, -h, 0.0],
        };
        Self {
            num_qubits: 2,
            amplitudes: DVector::from_iterator(4, amps.into_iter().map(re)),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let dim = self.dim() * other.dim();
        if dim > DIM_CAP {
            return Err(Error::DimensionCap { dim, cap: DIM_CAP });
        }
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn apply_gate(&self, g: &GatePlacement) -> Result<PureState> {
        g.validate(self.num_qubits)?;
        let n = self.num_qubits;
        let mut out = DVector::zeros(self.dim());
        match g.gate {
            Gate::Hadamard => {
                let mask = bit_mask(n, g.qubits()[0]);
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.dim() {
                    if i & mask == 0 {
                        let a = self.amplitudes[i];
                        let b = self.amplitudes[i | mask];
                        out[i] = (a + b) * h;
                        out[i | mask] = (a - b) * h;
                    }
                }
            }
            _ => {
                for i in 0..self.dim() {
                    let (j, phase) = g.monomial_image(n, i);
                    out[j] = phase * self.amplitudes[i];
                }
            }
        }
        Ok(Self {
            num_qubits: n,
            amplitudes: out,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Cnot,
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot => 2,
            _ => 1,
        }
    }
}

/// A gate together with the qubits it acts on (control first for CNOT).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GatePlacement {
    pub gate: Gate,
    qubits: [usize; 2],
}

impl GatePlacement {
    pub fn new(gate: Gate, qubits: &[usize]) -> Result<Self> {
        if qubits.len() != gate.arity() {
            return Err(Error::WrongQubitCount {
                expected: gate.arity(),
                actual: qubits.len(),
            });
        }
        if gate.arity() == 2 && qubits[0] == qubits[1] {
            return Err(Error::DuplicateQubit { qubit: qubits[0] });
        }
        let second = if gate.arity() == 2 { qubits[1] } else { qubits[0] };
        Ok(Self {
            gate,
            qubits: [qubits[0], second],
        })
    }

    /// CNOT with the given control and target.
    ///
    /// # Panics
    /// If `control == target`.
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control and target must differ");
        Self {
            gate: Gate::Cnot,
            qubits: [control, target],
        }
    }

    pub fn single(gate: Gate, qubit: usize) -> Self {
        assert_eq!(gate.arity(), 1, "{gate:?} is not a one-qubit gate");
        Self {
            gate,
            qubits: [qubit, qubit],
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.gate.arity()]
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for &q in self.qubits() {
            check_qubit(q, num_qubits)?;
        }
        Ok(())
    }

    /// Image of basis state `index` under a gate that permutes basis states up to phase.
    fn monomial_image(&self, num_qubits: usize, index: usize) -> (usize, C64) {
        let m0 = bit_mask(num_qubits, self.qubits[0]);
        match self.gate {
            Gate::Cnot => {
                let m1 = bit_mask(num_qubits, self.qubits[1]);
                if index & m0 != 0 {
                    (index ^ m1, ONE)
                } else {
                    (index, ONE)
                }
            }
            Gate::PauliX => (index ^ m0, ONE),
            Gate::PauliY => {
                // Y|0> = i|1>, Y|1> = -i|0>
                if index & m0 == 0 {
                    (index ^ m0, C64::new(0.0, 1.0))
                } else {
                    (index ^ m0, C64::new(0.0, -1.0))
                }
            }
            Gate::PauliZ => {
                if index & m0 == 0 {
                    (index, ONE)
                } else {
                    (index, -ONE)
                }
            }
            Gate::Hadamard => unreachable!("Hadamard is not monomial"),
        }
    }
}

/// Ordered gate list; the first element is applied first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GateSequence(Vec<GatePlacement>);

impl GateSequence {
    pub fn new(gates: Vec<GatePlacement>) -> Self {
        Self(gates)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn gates(&self) -> &[GatePlacement] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GatePlacement> {
        self.0.iter()
    }

    pub fn push(&mut self, g: GatePlacement) {
        self.0.push(g);
    }
}

impl FromIterator<GatePlacement> for GateSequence {
    fn from_iter<I: IntoIterator<Item = GatePlacement>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a GateSequence {
    type Item = &'a GatePlacement;
    type IntoIter = std::slice::Iter<'a, GatePlacement>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Kronecker product; the qubits of `a` precede those of `b`.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let dim = a.dim() * b.dim();
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    Ok(DensityOperator::from_raw(
        a.num_qubits + b.num_qubits,
        a.matrix.kronecker(&b.matrix),
    ))
}

fn sorted_unique(qubits: &[usize], num_qubits: usize) -> Result<Vec<usize>> {
    let mut out = qubits.to_vec();
    out.sort_unstable();
    for w in out.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateQubit { qubit: w[0] });
        }
    }
    for &q in &out {
        check_qubit(q, num_qubits)?;
    }
    Ok(out)
}

/// Full-register index offsets for every configuration of `qubits` (first qubit most significant).
fn subset_offsets(num_qubits: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|config| {
            qubits.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                if config & (1 << (k - 1 - pos)) != 0 {
                    acc | bit_mask(num_qubits, q)
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// Reduced matrix on `keep` (sorted, unique); works for unnormalized input.
pub(crate) fn reduce(m: &DMatrix<C64>, num_qubits: usize, keep: &[usize]) -> DMatrix<C64> {
    let traced: Vec<usize> = (0..num_qubits).filter(|q| !keep.contains(q)).collect();
    let kept = subset_offsets(num_qubits, keep);
    let rest = subset_offsets(num_qubits, &traced);
    let mut out = DMatrix::zeros(kept.len(), kept.len());
    for (b, &kb) in kept.iter().enumerate() {
        for (a, &ka) in kept.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &rest {
                acc += m[(ka | t, kb | t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Reduced operator on the `keep` qubits, in register order.
///
/// Tracing out the whole register is reported as [`Error::DegenerateTrace`].
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let keep = sorted_unique(keep, rho.num_qubits)?;
    if keep.is_empty() {
        return Err(Error::DegenerateTrace { trace: rho.trace() });
    }
    if keep.len() == rho.num_qubits {
        return Ok(rho.clone());
    }
    Ok(DensityOperator::from_raw(
        keep.len(),
        reduce(&rho.matrix, rho.num_qubits, &keep),
    ))
}

/// `U m U^dagger` for a gate placement; `m` need not be normalized.
pub(crate) fn conjugate(m: &DMatrix<C64>, num_qubits: usize, g: &GatePlacement) -> DMatrix<C64> {
    let dim = m.nrows();
    match g.gate {
        Gate::Hadamard => {
            let mask = bit_mask(num_qubits, g.qubits[0]);
            let h = 0.5;
            let mut out = DMatrix::zeros(dim, dim);
            // (H m H)[i,j] = sum_{k,l} H[i,k] m[k,l] H[l,j]
            for j in 0..dim {
                let j0 = j & !mask;
                let sj = if j & mask != 0 { -1.0 } else { 1.0 };
                for i in 0..dim {
                    let i0 = i & !mask;
                    let si = if i & mask != 0 { -1.0 } else { 1.0 };
                    let v = m[(i0, j0)] + m[(i0 | mask, j0)] * si + m[(i0, j0 | mask)] * sj
                        + m[(i0 | mask, j0 | mask)] * (si * sj);
                    out[(i, j)] = v * h;
                }
            }
            out
        }
        _ => {
            let images: Vec<(usize, C64)> =
                (0..dim).map(|i| g.monomial_image(num_qubits, i)).collect();
            let mut out = DMatrix::zeros(dim, dim);
            for (j, &(tj, pj)) in images.iter().enumerate() {
                let pj = pj.conj();
                for (i, &(ti, pi)) in images.iter().enumerate() {
                    out[(ti, tj)] = pi * pj * m[(i, j)];
                }
            }
            out
        }
    }
}

/// `U rho U^dagger` with `U` the gate embedded in the register.
pub fn apply_gate(rho: &DensityOperator, g: &GatePlacement) -> Result<DensityOperator> {
    g.validate(rho.num_qubits)?;
    Ok(DensityOperator::from_raw(
        rho.num_qubits,
        conjugate(&rho.matrix, rho.num_qubits, g),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBranch {
    pub probability: f64,
    pub outcome: u8,
    /// Post-measurement state of the remaining qubits (a 1x1 scalar if none remain).
    pub state: DensityOperator,
}

/// `<o| m |o>` on `qubit`, leaving an unnormalized operator on the other qubits.
pub(crate) fn project_out(
    m: &DMatrix<C64>,
    num_qubits: usize,
    qubit: usize,
    basis: Basis,
    outcome: u8,
) -> DMatrix<C64> {
    let rest_dim = m.nrows() / 2;
    let mut out = DMatrix::zeros(rest_dim, rest_dim);
    let o = usize::from(outcome & 1);
    for b in 0..rest_dim {
        for a in 0..rest_dim {
            out[(a, b)] = match basis {
                Basis::Z => {
                    m[(
                        insert_bit(a, num_qubits, qubit, o),
                        insert_bit(b, num_qubits, qubit, o),
                    )]
                }
                Basis::X => {
                    // <+-| = (<0| +- <1|)/sqrt(2)
                    let s = if o == 0 { 1.0 } else { -1.0 };
                    let a0 = insert_bit(a, num_qubits, qubit, 0);
                    let a1 = insert_bit(a, num_qubits, qubit, 1);
                    let b0 = insert_bit(b, num_qubits, qubit, 0);
                    let b1 = insert_bit(b, num_qubits, qubit, 1);
                    (m[(a0, b0)] + m[(a1, b0)] * s + m[(a0, b1)] * s + m[(a1, b1)]) * 0.5
                }
            };
        }
    }
    out
}

/// Outcome probabilities and normalized post-measurement states; zero-probability branches are dropped.
pub fn measure_branch(
    rho: &DensityOperator,
    qubit: usize,
    basis: Basis,
) -> Result<Vec<MeasurementBranch>> {
    check_qubit(qubit, rho.num_qubits)?;
    let mut branches = Vec::with_capacity(2);
    for outcome in 0..2u8 {
        let block = project_out(&rho.matrix, rho.num_qubits, qubit, basis, outcome);
        let probability = block.trace().re;
        if probability <= 1e-15 {
            continue;
        }
        branches.push(MeasurementBranch {
            probability,
            outcome,
            state: DensityOperator::from_raw(rho.num_qubits - 1, block * re(1.0 / probability)),
        });
    }
    Ok(branches)
}

/// `<psi| rho |psi>`.
pub fn overlap(rho: &DensityOperator, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: psi.dim(),
        });
    }
    Ok(quadratic_form(&rho.matrix, psi.amplitudes()))
}

pub(crate) fn quadratic_form(m: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    v.dotc(&(m * v)).re
}

fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_part(m).symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -1e-9 {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    // Round-off sized eigenvalues are treated as exact zeros; their square roots
    // would otherwise leak ~1e-8 into the fidelity.
    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = largest * f64::EPSILON * (m.nrows() as f64) * 4.0;
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| re(if l > floor { l.sqrt() } else { 0.0 })),
    );
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.adjoint())
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// Evaluated as the squared trace norm of `sqrt(rho) sqrt(sigma)`, which has the
/// same value and keeps small singular values accurate.
pub fn uhlmann_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let a = psd_sqrt(&rho.matrix)?;
    let b = psd_sqrt(&sigma.matrix)?;
    let trace_norm: f64 = (a * b).singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

/// Weights of the four Bell projectors in a two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellDiagCoeffs {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl BellDiagCoeffs {
    pub fn new(phi_plus: f64, phi_minus: f64, psi_plus: f64, psi_minus: f64) -> Self {
        Self {
            phi_plus,
            phi_minus,
            psi_plus,
            psi_minus,
        }
    }

    pub fn sum(&self) -> f64 {
        self.phi_plus + self.phi_minus + self.psi_plus + self.psi_minus
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.phi_plus, self.phi_minus, self.psi_plus, self.psi_minus]
    }

    /// Rebuilds the Bell-diagonal operator.
    pub fn to_operator(&self) -> Result<DensityOperator> {
        let mut m = DMatrix::zeros(4, 4);
        for (w, which) in self.as_array().into_iter().zip(BellState::ALL) {
            let v = PureState::bell(which);
            m += (v.amplitudes() * v.amplitudes().adjoint()) * re(w);
        }
        DensityOperator::new(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellDecomposition {
    pub coeffs: BellDiagCoeffs,
    /// Frobenius norm of everything outside the Bell-diagonal part.
    pub off_diagonal_norm: f64,
}

pub fn bell_diag_coeffs(rho: &DensityOperator) -> Result<BellDecomposition> {
    if rho.num_qubits != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            actual: rho.num_qubits,
        });
    }
    let mut diag = DMatrix::zeros(4, 4);
    let mut w = [0.0; 4];
    for (k, which) in BellState::ALL.into_iter().enumerate() {
        let v = PureState::bell(which);
        w[k] = quadratic_form(&rho.matrix, v.amplitudes());
        diag += (v.amplitudes() * v.amplitudes().adjoint()) * re(w[k]);
    }
    Ok(BellDecomposition {
        coeffs: BellDiagCoeffs::new(w[0], w[1], w[2], w[3]),
        off_diagonal_norm: (&rho.matrix - diag).norm(),
    })
}

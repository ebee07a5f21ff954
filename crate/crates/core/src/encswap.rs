//! Encoded entanglement swapping.
//!
//! Two encoded pairs meet at a station; the Bell measurement between them uses
//! three transversal CNOTs (control on qubit `3+k` of the left pair, target on
//! qubit `k` of the right pair). Pauli errors at those CNOTs are correctable
//! as long as at most one of them flips a measured Z triple.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::encgen::{encoded_pair, encoded_phi_plus, EncodedPair, BLOCK, CODE_QUBITS};
use crate::error::{check_probability, Error, Result};
use crate::qstate::{quadratic_form, DensityOperator, Gate, GatePlacement, PureState, C64};

/// Number of correctable, mutually orthogonal two-pair states.
pub const CORRECTABLE_STATE_COUNT: usize = 64;

/// `2^6 - 1`, the dimension of the complement of the encoded Bell state.
const COMPLEMENT_DIM: f64 = 63.0;

/// Pauli pair (control, target) occurring at one Bell-measurement CNOT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorPair {
    XX,
    YY,
    ZZ,
    II,
    IX,
    XI,
}

impl ErrorPair {
    pub const ALL: [ErrorPair; 6] = [
        ErrorPair::XX,
        ErrorPair::YY,
        ErrorPair::ZZ,
        ErrorPair::II,
        ErrorPair::IX,
        ErrorPair::XI,
    ];

    /// Paulis on (control, target); `None` is the identity.
    pub fn paulis(self) -> (Option<Gate>, Option<Gate>) {
        use Gate::{PauliX, PauliY, PauliZ};
        match self {
            ErrorPair::XX => (Some(PauliX), Some(PauliX)),
            ErrorPair::YY => (Some(PauliY), Some(PauliY)),
            ErrorPair::ZZ => (Some(PauliZ), Some(PauliZ)),
            ErrorPair::II => (None, None),
            ErrorPair::IX => (None, Some(PauliX)),
            ErrorPair::XI => (Some(PauliX), None),
        }
    }

    /// Whether the pair flips one bit of the measured Z triple.
    pub fn is_flip(self) -> bool {
        matches!(self, ErrorPair::IX | ErrorPair::XI)
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorPair::XX => "XX",
            ErrorPair::YY => "YY",
            ErrorPair::ZZ => "ZZ",
            ErrorPair::II => "II",
            ErrorPair::IX => "IX",
            ErrorPair::XI => "XI",
        }
    }
}

impl fmt::Display for ErrorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One error pair per Bell-measurement CNOT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliCombo(pub [ErrorPair; BLOCK]);

impl PauliCombo {
    pub const IDENTITY: PauliCombo = PauliCombo([ErrorPair::II; BLOCK]);

    pub fn is_admissible(&self) -> bool {
        self.0.iter().filter(|p| p.is_flip()).count() <= 1
    }

    /// Paulis on the left pair (control side, qubits 3..6).
    pub fn left_operators(&self) -> Vec<GatePlacement> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.paulis().0.map(|g| GatePlacement::single(g, BLOCK + k)))
            .collect()
    }

    /// Paulis on the right pair (target side, qubits 0..3).
    pub fn right_operators(&self) -> Vec<GatePlacement> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.paulis().1.map(|g| GatePlacement::single(g, k)))
            .collect()
    }
}

impl fmt::Display for PauliCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Counts of the error-combination enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct ComboEnumeration {
    /// All triples from the six-element set: 216.
    pub raw_count: usize,
    /// Triples with at most one flip pair: 160.
    pub admissible_count: usize,
    /// `admissible_count * 6`, the count quoted with permutations of the CNOT positions.
    pub permutation_count: usize,
    pub admissible: Vec<PauliCombo>,
}

pub fn enumerate_combos() -> ComboEnumeration {
    let all: Vec<PauliCombo> = ErrorPair::ALL
        .iter()
        .flat_map(|&a| {
            ErrorPair::ALL.iter().flat_map(move |&b| {
                ErrorPair::ALL.iter().map(move |&c| PauliCombo([a, b, c]))
            })
        })
        .collect();
    let admissible: Vec<PauliCombo> = all.iter().copied().filter(PauliCombo::is_admissible).collect();
    ComboEnumeration {
        raw_count: all.len(),
        admissible_count: admissible.len(),
        permutation_count: admissible.len() * 6,
        admissible,
    }
}

/// A correctable state `A|phi~+> ⊗ B|phi~+>`, stored in factorized form.
#[derive(Clone, Debug)]
pub struct CorrectableState {
    /// First combo (in enumeration order) producing this state.
    pub combo: PauliCombo,
    pub left: PureState,
    pub right: PureState,
}

impl CorrectableState {
    /// The 12-qubit vector; 4096 amplitudes.
    pub fn full(&self) -> PureState {
        self.left
            .tensor(&self.right)
            .expect("12 qubits are within the cap")
    }

    /// `<self|other>` through the factorization.
    pub fn inner(&self, other: &CorrectableState) -> C64 {
        self.left.inner(&other.left) * self.right.inner(&other.right)
    }
}

#[derive(Clone, Debug)]
pub struct CorrectableStateSet {
    states: Vec<CorrectableState>,
}

impl CorrectableStateSet {
    pub fn states(&self) -> &[CorrectableState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest `|<i|j>|` over distinct members.
    pub fn max_cross_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.states.iter().enumerate() {
            for b in &self.states[i + 1..] {
                worst = worst.max(a.inner(b).norm());
            }
        }
        worst
    }
}

fn apply_all(psi: &PureState, ops: &[GatePlacement]) -> PureState {
    ops.iter().fold(psi.clone(), |v, g| {
        v.apply_gate(g).expect("Pauli placements lie inside the 6-qubit block")
    })
}

/// Builds the deduplicated correctable states from the admissible combos.
pub fn correctable_states() -> Result<CorrectableStateSet> {
    let phi = encoded_phi_plus();
    let mut states: Vec<CorrectableState> = Vec::with_capacity(CORRECTABLE_STATE_COUNT);
    for combo in enumerate_combos().admissible {
        let candidate = CorrectableState {
            combo,
            left: apply_all(&phi, &combo.left_operators()),
            right: apply_all(&phi, &combo.right_operators()),
        };
        if !states
            .iter()
            .any(|s| s.inner(&candidate).norm() > 1.0 - 1e-9)
        {
            states.push(candidate);
        }
    }
    if states.len() != CORRECTABLE_STATE_COUNT {
        return Err(Error::CorrectableStateCount {
            found: states.len(),
            expected: CORRECTABLE_STATE_COUNT,
        });
    }
    Ok(CorrectableStateSet { states })
}

fn shared_states() -> Result<&'static CorrectableStateSet> {
    static SET: OnceLock<std::result::Result<CorrectableStateSet, Error>> = OnceLock::new();
    SET.get_or_init(correctable_states).as_ref().map_err(Clone::clone)
}

fn require_code_register(rho: &DensityOperator) -> Result<()> {
    if rho.num_qubits() != CODE_QUBITS {
        return Err(Error::WrongQubitCount {
            expected: CODE_QUBITS,
            actual: rho.num_qubits(),
        });
    }
    Ok(())
}

/// `p_s = sum_i <phi_i| rho ⊗ rho |phi_i>`, evaluated as sums of products of 64-dim expectations.
pub fn swap_success_prob(rho: &DensityOperator) -> Result<f64> {
    require_code_register(rho)?;
    let set = shared_states()?;
    let p: f64 = set
        .states()
        .iter()
        .map(|s| {
            quadratic_form(rho.matrix(), s.left.amplitudes())
                * quadratic_form(rho.matrix(), s.right.amplitudes())
        })
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// `P_r = p_s^r`.
pub fn chain_success_prob(p_s: f64, r: u32) -> Result<f64> {
    check_probability("p_s", p_s)?;
    if r == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: 0.0,
            range: "r >= 1",
        });
    }
    Ok(p_s.powf(f64::from(r)))
}

fn phi_tilde_projector() -> DensityOperator {
    DensityOperator::pure(&encoded_phi_plus())
}

/// `a |phi~+><phi~+| + b 1_64`.
fn phi_plus_and_identity(a: f64, b: f64) -> DMatrix<C64> {
    let mut m = phi_tilde_projector().into_matrix() * C64::from(a);
    for i in 0..m.nrows() {
        m[(i, i)] += C64::from(b);
    }
    m
}

/// `P_r |phi~+><phi~+| + (1-P_r)/63 (1 - |phi~+><phi~+|)`.
pub fn swapped_state_ideal(p_r: f64) -> Result<DensityOperator> {
    let p = check_probability("P_r", p_r)?;
    let c = (1.0 - p) / COMPLEMENT_DIM;
    Ok(DensityOperator::from_raw(
        CODE_QUBITS,
        phi_plus_and_identity(p - c, c),
    ))
}

/// Weights of `rho_s(r)`: perfect projector, dephased GHZ mixture and maximally mixed remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoSWeights {
    /// `(1-beta)^(3r)`.
    pub perfect: f64,
    /// `3^r beta^r (1-beta)^(2r)`.
    pub dephased: f64,
    /// `1 - perfect - dephased`.
    pub remainder: f64,
}

impl RhoSWeights {
    pub fn new(beta: f64, r: u32) -> Result<Self> {
        let beta = check_probability("beta", beta)?;
        if r == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "r",
                value: 0.0,
                range: "r >= 1",
            });
        }
        let r = f64::from(r);
        let perfect = (1.0 - beta).powf(3.0 * r);
        // log space keeps 3^r beta^r finite for large r
        let dephased = if beta == 0.0 || beta == 1.0 {
            0.0
        } else {
            (r * (3.0 * beta).ln() + 2.0 * r * (-beta).ln_1p()).exp()
        };
        let remainder = 1.0 - perfect - dephased;
        assert!(
            remainder >= -1e-12,
            "rho_s remainder weight {remainder} is negative"
        );
        Ok(Self {
            perfect,
            dephased,
            remainder: remainder.max(0.0),
        })
    }
}

/// `1/2 (Pi_000000 + Pi_111111)`.
pub fn dephased_ghz(num_qubits: usize) -> DensityOperator {
    let dim = 1usize << num_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    m[(0, 0)] = C64::from(0.5);
    m[(dim - 1, dim - 1)] = C64::from(0.5);
    DensityOperator::from_raw(num_qubits, m)
}

/// Noisy encoded state after `r` rounds of Bell-measurement CNOTs.
pub fn rho_s(beta: f64, r: u32) -> Result<DensityOperator> {
    let w = RhoSWeights::new(beta, r)?;
    let mut m = phi_plus_and_identity(w.perfect, w.remainder / 64.0);
    m += dephased_ghz(CODE_QUBITS).into_matrix() * C64::from(w.dephased);
    Ok(DensityOperator::from_raw(CODE_QUBITS, m))
}

/// Swap success probability of one parameter point, computed once and reused across `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapModel {
    pub beta: f64,
    pub f0: f64,
    pub p_s: f64,
}

impl SwapModel {
    pub fn new(beta: f64, f0: f64) -> Result<Self> {
        let enc = encoded_pair(beta, f0)?;
        Self::from_encoded(&enc)
    }

    pub fn from_encoded(enc: &EncodedPair) -> Result<Self> {
        Ok(Self {
            beta: enc.beta,
            f0: enc.f0,
            p_s: swap_success_prob(&enc.state)?,
        })
    }

    pub fn chain_success(&self, r: u32) -> Result<f64> {
        chain_success_prob(self.p_s, r)
    }

    /// `P_r rho_s(r) + (1-P_r)/63 (1 - |phi~+><phi~+|)`.
    pub fn swapped_state(&self, r: u32) -> Result<DensityOperator> {
        let p_r = self.chain_success(r)?;
        let c = (1.0 - p_r) / COMPLEMENT_DIM;
        let mut m = rho_s(self.beta, r)?.into_matrix() * C64::from(p_r);
        m += phi_plus_and_identity(-c, c);
        Ok(DensityOperator::from_raw(CODE_QUBITS, m))
    }
}

/// State shared across `r` swaps with the noisy encoded pairs of `(beta, f0)`.
pub fn swapped_state_nonideal(beta: f64, f0: f64, r: u32) -> Result<DensityOperator> {
    SwapModel::new(beta, f0)?.swapped_state(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::overlap;
    use proptest::prelude::*;

    #[test]
    fn combo_counts() {
        let e = enumerate_combos();
        assert_eq!(e.raw_count, 216);
        assert_eq!(e.admissible_count, 160);
        assert_eq!(e.admissible_count, 4 * 4 * 4 + 3 * 2 * 4 * 4);
        assert_eq!(e.permutation_count, 960);
        use ErrorPair::*;
        assert!(!e.admissible.contains(&PauliCombo([IX, IX, II])));
        assert!(e.admissible.contains(&PauliCombo([IX, ZZ, YY])));
    }

    #[test]
    fn sixty_four_orthogonal_states() {
        let set = correctable_states().unwrap();
        assert_eq!(set.len(), 64);
        assert!(set.max_cross_overlap() < 1e-9);
    }

    #[test]
    fn identity_combo_is_the_unperturbed_pair() {
        let set = correctable_states().unwrap();
        let phi = encoded_phi_plus();
        let found = set.states().iter().any(|s| {
            (s.left.inner(&phi).norm() - 1.0).abs() < 1e-12
                && (s.right.inner(&phi).norm() - 1.0).abs() < 1e-12
        });
        assert!(found);
    }

    #[test]
    fn single_xx_error_is_covered_by_a_distinct_state() {
        // X on a left code qubit and X on a right code qubit each take phi~+ out of its span
        let phi = encoded_phi_plus();
        let xx = PauliCombo([ErrorPair::XX, ErrorPair::II, ErrorPair::II]);
        let left = apply_all(&phi, &xx.left_operators());
        let right = apply_all(&phi, &xx.right_operators());
        let overlap = (left.inner(&phi) * right.inner(&phi)).norm();
        let set = correctable_states().unwrap();
        let merged = set.states().iter().any(|s| {
            (s.left.inner(&left) * s.right.inner(&right)).norm() > 1.0 - 1e-9
        });
        assert!(overlap < 1e-12);
        assert!(merged);
    }

    #[test]
    fn ideal_pair_swaps_with_certainty() {
        let p = SwapModel::new(0.0, 1.0).unwrap().p_s;
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn success_probability_decreases_with_beta() {
        let p: Vec<f64> = [0.0, 0.005, 0.01]
            .iter()
            .map(|&b| SwapModel::new(b, 1.0).unwrap().p_s)
            .collect();
        assert!(p[0] >= p[1] && p[1] >= p[2], "{p:?}");
        assert!((p[2] - 0.891_51).abs() < 1e-5, "{}", p[2]);
    }

    #[test]
    fn chain_probability() {
        assert_eq!(chain_success_prob(0.8, 1).unwrap(), 0.8);
        assert_eq!(chain_success_prob(1.0, 1023).unwrap(), 1.0);
        let oracle = 0.99f64 * 0.99 * 0.99 * 0.99 * 0.99 * 0.99 * 0.99;
        assert!((chain_success_prob(0.99, 7).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.932_065_347_906_4).abs() < 1e-12);
        assert!(chain_success_prob(0.9, 0).is_err());
        assert!(chain_success_prob(1.1, 2).is_err());
    }

    #[test]
    fn ideal_swapped_state_examples() {
        let phi = encoded_phi_plus();
        let perfect = swapped_state_ideal(1.0).unwrap();
        assert!(perfect.max_abs_diff(&DensityOperator::pure(&phi)) < 1e-15);
        let complement = swapped_state_ideal(0.0).unwrap();
        assert!(overlap(&complement, &phi).unwrap().abs() < 1e-15);
        assert!((complement.entry(5, 5).re - 1.0 / 63.0).abs() < 1e-15);
        assert!((swapped_state_ideal(0.7).unwrap().trace() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rho_s_weights() {
        let w = RhoSWeights::new(0.01, 1).unwrap();
        assert!((w.perfect - 0.99f64.powi(3)).abs() < 1e-15);
        assert!((w.dephased - 3.0 * 0.01 * 0.99 * 0.99).abs() < 1e-15);
        let w = RhoSWeights::new(0.01, 2).unwrap();
        assert!((w.dephased - 9.0e-4 * 0.99f64.powi(4)).abs() < 1e-16);
        assert!((w.dephased - 8.645_364_09e-4).abs() < 1e-12);
        let w = RhoSWeights::new(0.2, 1023).unwrap();
        assert!(w.dephased.is_finite() && w.remainder <= 1.0);
        let phi = DensityOperator::pure(&encoded_phi_plus());
        assert!(rho_s(0.0, 5).unwrap().max_abs_diff(&phi) < 1e-15);
    }

    #[test]
    fn nonideal_swapped_state_examples() {
        let phi = encoded_phi_plus();
        let s = swapped_state_nonideal(0.0, 1.0, 4).unwrap();
        assert!(s.max_abs_diff(&DensityOperator::pure(&phi)) < 1e-12);
        let s = swapped_state_nonideal(0.005, 0.98, 3).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-12);
        let model = SwapModel::new(0.005, 0.99).unwrap();
        let f: Vec<f64> = (1..=5)
            .map(|r| overlap(&model.swapped_state(r).unwrap(), &phi).unwrap())
            .collect();
        assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn swapped_states_are_valid(beta in 0.0f64..0.05, f0 in 0.9f64..=1.0, r in 1u32..64) {
            let s = swapped_state_nonideal(beta, f0, r).unwrap();
            prop_assert!((s.trace() - 1.0).abs() < 1e-10);
            prop_assert!(s.min_eigenvalue() > -1e-10);
            let p = SwapModel::new(beta, f0).unwrap().p_s;
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

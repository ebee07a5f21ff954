//! Gate noise maps and the depolarized Bell-pair source.
//!
//! Every two-qubit gate fails by depolarizing its pair with probability
//! `beta`. A sequence of `n` such gates is approximated to first order: either
//! all gates work, exactly one gate fails, or (with the leftover probability)
//! the register is replaced by the maximally mixed state.

use nalgebra::DMatrix;

use crate::error::{check_probability, Error, Result};
use crate::qstate::{
    conjugate, reduce, BellState, DensityOperator, GatePlacement, GateSequence, PureState,
    C64,
};

/// Depolarization probability of a two-qubit gate; `p_G = 1 - beta`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NoiseParams {
    beta: f64,
}

impl NoiseParams {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(Self {
            beta: check_probability("beta", beta)?,
        })
    }

    pub fn from_gate_quality(p_g: f64) -> Result<Self> {
        check_probability("gate quality", p_g)?;
        Self::new(1.0 - p_g)
    }

    pub fn beta(self) -> f64 {
        self.beta
    }

    pub fn gate_quality(self) -> f64 {
        1.0 - self.beta
    }
}

/// Fidelity of the distributed Bell pairs to `phi+`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SourceParams {
    f0: f64,
}

impl SourceParams {
    pub fn new(f0: f64) -> Result<Self> {
        Ok(Self {
            f0: check_probability("F0", f0)?,
        })
    }

    pub fn f0(self) -> f64 {
        self.f0
    }
}

/// `F0 |phi+><phi+| + (1-F0)/3 (1 - |phi+><phi+|)`.
pub fn source_state(f0: f64) -> Result<DensityOperator> {
    let f0 = SourceParams::new(f0)?.f0();
    let phi = DensityOperator::pure(&PureState::bell(BellState::PhiPlus));
    let mixed = DensityOperator::maximally_mixed(2)?;
    // (1-F0)/3 (1 - phi) = 4(1-F0)/3 * 1/4 - (1-F0)/3 phi
    let w = (1.0 - f0) / 3.0;
    DensityOperator::mixture(&[(f0 - w, &phi), (4.0 * w, &mixed)])
}

fn require_two_qubit(g: &GatePlacement) -> Result<()> {
    if g.qubits().len() != 2 {
        return Err(Error::NotTwoQubitGate(format!("{:?}", g.gate)));
    }
    Ok(())
}

fn check_sequence(seq: &GateSequence, num_qubits: usize) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    for g in seq {
        require_two_qubit(g)?;
        g.validate(num_qubits)?;
    }
    Ok(())
}

/// `Tr_{i,j}(m) ⊗ 1_{i,j}/4`, with the identity put back on the gate's own qubits.
pub(crate) fn replace_with_noise(
    m: &DMatrix<C64>,
    num_qubits: usize,
    g: &GatePlacement,
) -> DMatrix<C64> {
    let pair = g.qubits();
    let keep: Vec<usize> = (0..num_qubits).filter(|q| !pair.contains(q)).collect();
    let reduced = if keep.is_empty() {
        DMatrix::from_element(1, 1, m.trace())
    } else {
        reduce(m, num_qubits, &keep)
    };
    let dim = m.nrows();
    let mask = crate::qstate::bit_mask(num_qubits, pair[0]) | crate::qstate::bit_mask(num_qubits, pair[1]);
    // Index of a full basis state inside the reduced register.
    let squeeze = |full: usize| -> usize {
        keep.iter().fold(0usize, |acc, &q| {
            (acc << 1) | usize::from(full & crate::qstate::bit_mask(num_qubits, q) != 0)
        })
    };
    let reduced_index: Vec<usize> = (0..dim).map(squeeze).collect();
    let mut out = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            // identity on the pair: pair bits of row and column must agree
            if (i & mask) == (j & mask) {
                out[(i, j)] = reduced[(reduced_index[i], reduced_index[j])] * 0.25;
            }
        }
    }
    out
}

/// Single noisy gate: `(1-beta) U rho U^dagger + beta/4 Tr_{i,j}(rho) ⊗ 1_{i,j}`.
pub fn depolarizing_gate(
    rho: &DensityOperator,
    g: &GatePlacement,
    beta: f64,
) -> Result<DensityOperator> {
    let beta = NoiseParams::new(beta)?.beta();
    require_two_qubit(g)?;
    g.validate(rho.num_qubits())?;
    let n = rho.num_qubits();
    let m = conjugate(rho.matrix(), n, g) * C64::from(1.0 - beta)
        + replace_with_noise(rho.matrix(), n, g) * C64::from(beta);
    Ok(DensityOperator::from_raw(n, m))
}

/// Which term of the first-order expansion a branch represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchKind {
    /// All gates act perfectly.
    Perfect,
    /// Gate `a` (0-based) is replaced by the depolarizing replacement; the others are perfect.
    Faulty(usize),
    /// Leftover probability, carried by the maximally mixed state.
    Remainder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseBranch {
    pub weight: f64,
    pub kind: BranchKind,
}

/// `1 - (1-beta)^n - n beta (1-beta)^(n-1)`.
pub fn remainder_weight(n: usize, beta: f64) -> f64 {
    let (w_perfect, w_one) = first_order_weights(n, beta);
    (1.0 - w_perfect - w_one).max(0.0)
}

/// `((1-beta)^n, n beta (1-beta)^(n-1))`.
pub fn first_order_weights(n: usize, beta: f64) -> (f64, f64) {
    let q = 1.0 - beta;
    let n_i = n as i32;
    (q.powi(n_i), n as f64 * beta * q.powi(n_i - 1))
}

/// Weighted branch list of the first-order map over `n` gates: perfect, `n` single faults, remainder.
pub fn first_order_branches(n: usize, beta: f64) -> Result<Vec<NoiseBranch>> {
    let beta = NoiseParams::new(beta)?.beta();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let (w_perfect, w_one) = first_order_weights(n, beta);
    let mut out = Vec::with_capacity(n + 2);
    out.push(NoiseBranch {
        weight: w_perfect,
        kind: BranchKind::Perfect,
    });
    out.extend((0..n).map(|a| NoiseBranch {
        weight: w_one / n as f64,
        kind: BranchKind::Faulty(a),
    }));
    out.push(NoiseBranch {
        weight: remainder_weight(n, beta),
        kind: BranchKind::Remainder,
    });
    Ok(out)
}

/// Applies gate `index` of a sequence either perfectly or as the faulty replacement.
pub(crate) fn apply_in_branch(
    m: &DMatrix<C64>,
    num_qubits: usize,
    g: &GatePlacement,
    index: usize,
    kind: BranchKind,
) -> DMatrix<C64> {
    match kind {
        BranchKind::Faulty(a) if a == index => replace_with_noise(m, num_qubits, g),
        _ => conjugate(m, num_qubits, g),
    }
}

fn run_branch(rho: &DensityOperator, seq: &GateSequence, kind: BranchKind) -> DMatrix<C64> {
    let n = rho.num_qubits();
    seq.iter()
        .enumerate()
        .fold(rho.matrix().clone(), |m, (idx, g)| {
            apply_in_branch(&m, n, g, idx, kind)
        })
}

/// Uniform mixture over the `n` single-fault branches.
pub fn one_faulty_mix(rho: &DensityOperator, seq: &GateSequence) -> Result<DensityOperator> {
    check_sequence(seq, rho.num_qubits())?;
    let dim = rho.dim();
    let weight = C64::from(1.0 / seq.len() as f64);
    let mut acc = DMatrix::zeros(dim, dim);
    for a in 0..seq.len() {
        acc += run_branch(rho, seq, BranchKind::Faulty(a)) * weight;
    }
    Ok(DensityOperator::from_raw(rho.num_qubits(), acc))
}

/// First-order concatenation of `n` noisy gates with a maximally mixed remainder.
pub fn concat_first_order(
    rho: &DensityOperator,
    seq: &GateSequence,
    beta: f64,
) -> Result<DensityOperator> {
    check_sequence(seq, rho.num_qubits())?;
    let dim = rho.dim();
    let mut acc = DMatrix::zeros(dim, dim);
    for branch in first_order_branches(seq.len(), beta)? {
        match branch.kind {
            BranchKind::Remainder => {
                for i in 0..dim {
                    acc[(i, i)] += C64::from(branch.weight / dim as f64);
                }
            }
            kind => acc += run_branch(rho, seq, kind) * C64::from(branch.weight),
        }
    }
    Ok(DensityOperator::from_raw(rho.num_qubits(), acc))
}

/// `(1-beta)^n` perfect sequence plus `1 - (1-beta)^n` maximally mixed.
pub fn concat_simple(
    rho: &DensityOperator,
    seq: &GateSequence,
    beta: f64,
) -> Result<DensityOperator> {
    let beta = NoiseParams::new(beta)?.beta();
    check_sequence(seq, rho.num_qubits())?;
    let w = (1.0 - beta).powi(seq.len() as i32);
    let perfect = DensityOperator::from_raw(rho.num_qubits(), run_branch(rho, seq, BranchKind::Perfect));
    let mixed = DensityOperator::maximally_mixed(rho.num_qubits())?;
    DensityOperator::mixture(&[(w, &perfect), (1.0 - w, &mixed)])
}

/// Exact composition of independent depolarizing gates (no truncation); a reference for the first-order maps.
pub fn concat_exact(
    rho: &DensityOperator,
    seq: &GateSequence,
    beta: f64,
) -> Result<DensityOperator> {
    check_sequence(seq, rho.num_qubits())?;
    seq.iter()
        .try_fold(rho.clone(), |r, g| depolarizing_gate(&r, g, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{apply_gate, bell_diag_coeffs, overlap, partial_trace, tensor};
    use proptest::prelude::*;

    fn cnot_seq(pairs: &[(usize, usize)]) -> GateSequence {
        pairs.iter().map(|&(c, t)| GatePlacement::cnot(c, t)).collect()
    }

    fn ghz_input() -> DensityOperator {
        // (|0>+|1>)|00>/sqrt(2)
        let plus = DensityOperator::pure(
            &PureState::normalized(nalgebra::DVector::from_vec(vec![C64::from(1.0); 2])).unwrap(),
        );
        tensor(&plus, &DensityOperator::basis_projector(&[0, 0])).unwrap()
    }

    #[test]
    fn depolarizing_gate_limits() {
        let rho = DensityOperator::pure(&PureState::bell(BellState::PsiMinus));
        let g = GatePlacement::cnot(0, 1);
        let ideal = apply_gate(&rho, &g).unwrap();
        assert!(depolarizing_gate(&rho, &g, 0.0).unwrap().max_abs_diff(&ideal) < 1e-15);

        let three = tensor(&ghz_input(), &DensityOperator::basis_projector(&[1])).unwrap();
        let g = GatePlacement::cnot(1, 3);
        let out = depolarizing_gate(&three, &g, 1.0).unwrap();
        // Tr_{1,3}(rho) ⊗ 1/4 on qubits 1 and 3
        let kept = partial_trace(&three, &[0, 2]).unwrap();
        assert!(partial_trace(&out, &[0, 2]).unwrap().max_abs_diff(&kept) < 1e-15);
        let pair = partial_trace(&out, &[1, 3]).unwrap();
        assert!(pair.max_abs_diff(&DensityOperator::maximally_mixed(2).unwrap()) < 1e-15);
    }

    #[test]
    fn depolarizing_gate_on_bell_pair() {
        let rho = DensityOperator::pure(&PureState::bell(BellState::PhiPlus));
        // CNOT leaves phi+ on the computational pair? No: CNOT|phi+> = |+>|0>, so undo it first.
        let g = GatePlacement::cnot(0, 1);
        let pre = apply_gate(&rho, &g).unwrap();
        let out = depolarizing_gate(&pre, &g, 0.1).unwrap();
        let f = overlap(&out, &PureState::bell(BellState::PhiPlus)).unwrap();
        assert!((f - 0.925).abs() < 1e-14, "{f}");
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let g = GatePlacement::cnot(0, 1);
        assert!(depolarizing_gate(&rho, &g, 1.5).is_err());
        assert!(depolarizing_gate(&rho, &g, -0.1).is_err());
        assert!(concat_first_order(&rho, &cnot_seq(&[(0, 1)]), f64::NAN).is_err());
        assert!(concat_first_order(&rho, &GateSequence::default(), 0.1).is_err());
    }

    #[test]
    fn one_faulty_examples() {
        let zero = DensityOperator::basis_projector(&[0, 0]);
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let out = one_faulty_mix(&zero, &cnot_seq(&[(0, 1)])).unwrap();
        assert!(out.max_abs_diff(&mixed) < 1e-15);
        let out = one_faulty_mix(&zero, &cnot_seq(&[(0, 1), (0, 1)])).unwrap();
        assert!(out.max_abs_diff(&mixed) < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_order_reduces_to_single_gate_map() {
        let rho = DensityOperator::pure(&PureState::bell(BellState::PsiPlus));
        let g = GatePlacement::cnot(1, 0);
        for beta in [0.0, 0.03, 0.2, 1.0] {
            let a = concat_first_order(&rho, &GateSequence::new(vec![g]), beta).unwrap();
            let b = depolarizing_gate(&rho, &g, beta).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-15);
        }
    }

    #[test]
    fn remainder_weight_example() {
        // scalar oracle evaluated independently of first_order_weights
        let expect = 1.0 - 0.99f64.powi(6) - 6.0 * 0.01 * 0.99f64.powi(5);
        assert!((remainder_weight(6, 0.01) - expect).abs() < 1e-18);
        assert!((remainder_weight(6, 0.01) - 1.460_447_605e-3).abs() < 1e-12);
        assert!(remainder_weight(6, 0.01) <= 1.5e-3);
        for beta in [0.0, 0.001, 0.005, 0.01] {
            for n in 1..=6 {
                assert!(remainder_weight(n, beta) <= 1.5e-3);
            }
        }
    }

    #[test]
    fn simple_map_limits() {
        let rho = ghz_input();
        let seq = cnot_seq(&[(0, 1), (0, 2)]);
        let perfect = concat_first_order(&rho, &seq, 0.0).unwrap();
        assert!(concat_simple(&rho, &seq, 0.0).unwrap().max_abs_diff(&perfect) < 1e-15);
        let mixed = DensityOperator::maximally_mixed(3).unwrap();
        assert!(concat_simple(&rho, &seq, 1.0).unwrap().max_abs_diff(&mixed) < 1e-15);
        let ghz = PureState::ghz(3);
        assert!((overlap(&perfect, &ghz).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_order_beats_simple_map_on_encoding_circuit() {
        let rho = ghz_input();
        let seq = cnot_seq(&[(0, 1), (0, 2)]);
        let ghz = PureState::ghz(3);
        let mut last = f64::INFINITY;
        for step in 0..=10 {
            let beta = 0.005 * step as f64;
            let conc = overlap(&concat_first_order(&rho, &seq, beta).unwrap(), &ghz).unwrap();
            let simple = overlap(&concat_simple(&rho, &seq, beta).unwrap(), &ghz).unwrap();
            assert!(simple <= conc + 1e-15, "beta {beta}: {simple} > {conc}");
            assert!(conc <= last + 1e-15);
            last = conc;
        }
    }

    #[test]
    fn source_state_examples() {
        let phi = DensityOperator::pure(&PureState::bell(BellState::PhiPlus));
        assert!(source_state(1.0).unwrap().max_abs_diff(&phi) < 1e-15);
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        assert!(source_state(0.25).unwrap().max_abs_diff(&mixed) < 1e-15);
        let c = bell_diag_coeffs(&source_state(0.98).unwrap()).unwrap().coeffs;
        let w = 0.02 / 3.0;
        for (x, e) in c.as_array().into_iter().zip([0.98, w, w, w]) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!(source_state(1.01).is_err());
    }

    #[test]
    fn branch_weights_sum_to_one() {
        for n in 1..=8 {
            for beta in [0.0, 0.01, 0.3, 1.0] {
                let total: f64 = first_order_branches(n, beta)
                    .unwrap()
                    .iter()
                    .map(|b| b.weight)
                    .sum();
                assert!((total - 1.0).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn maps_are_trace_and_positivity_preserving(
            beta in 0.0f64..=1.0,
            f0 in 0.0f64..=1.0,
            gates in prop::collection::vec((0usize..3, 0usize..3), 1..5),
        ) {
            let gates: Vec<_> = gates.into_iter().filter(|(c, t)| c != t).collect();
            prop_assume!(!gates.is_empty());
            let seq = cnot_seq(&gates);
            let rho = tensor(&source_state(f0).unwrap(), &DensityOperator::basis_projector(&[1])).unwrap();
            for out in [
                concat_first_order(&rho, &seq, beta).unwrap(),
                concat_simple(&rho, &seq, beta).unwrap(),
                concat_exact(&rho, &seq, beta).unwrap(),
                one_faulty_mix(&rho, &seq).unwrap(),
            ] {
                prop_assert!((out.trace() - 1.0).abs() < 1e-10);
                prop_assert!(out.min_eigenvalue() > -1e-10);
                prop_assert!(out.hermiticity_deviation() < 1e-12);
            }
        }
    }
}

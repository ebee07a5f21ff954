//! Generation of the noisy encoded Bell pair.
//!
//! Station `i` holds a GHZ-encoded qubit on code qubits 0..3, station `i+1` a
//! `|000>` register on code qubits 3..6. Three teleportation-based CNOTs, each
//! consuming one depolarized Bell pair, entangle the two blocks into
//! `(|000000> + |111111>)/sqrt(2)`.

use nalgebra::DMatrix;

use crate::channels::{
    apply_in_branch, first_order_branches, source_state, BranchKind, NoiseParams, SourceParams,
};
use crate::error::{Error, Result};
use crate::qstate::{
    bit_mask, conjugate, project_out, tensor, Basis, DensityOperator, Gate, GatePlacement,
    GateSequence, PureState, C64,
};

/// Qubits per encoded block.
pub const BLOCK: usize = 3;
/// Qubits of the encoded pair (two blocks).
pub const CODE_QUBITS: usize = 2 * BLOCK;
/// Code register plus the three resource Bell pairs.
pub const FULL_REGISTER_QUBITS: usize = CODE_QUBITS + 2 * BLOCK;

/// `(|000000> + |111111>)/sqrt(2)`.
pub fn encoded_phi_plus() -> PureState {
    PureState::ghz(CODE_QUBITS)
}

/// Noisy GHZ register after two faulty CNOTs, in closed form.
pub fn ghz_prep(beta: f64) -> Result<DensityOperator> {
    let b = NoiseParams::new(beta)?.beta();
    let ends = 0.5 * (1.0 + b * (b / 2.0 - 1.25));
    let coherence = 0.5 * (1.0 - b).powi(2);
    let middle = b / 4.0 * (1.5 - b);
    let edge = b / 8.0;
    let mut m = DMatrix::zeros(8, 8);
    let weights = [
        (0b000, ends),
        (0b111, ends),
        (0b101, middle),
        (0b010, middle),
        (0b001, edge),
        (0b110, edge),
        (0b100, edge),
        (0b011, edge),
    ];
    for (i, w) in weights {
        m[(i, i)] = C64::from(w);
    }
    m[(0b000, 0b111)] = C64::from(coherence);
    m[(0b111, 0b000)] = C64::from(coherence);
    Ok(DensityOperator::from_raw(BLOCK, m))
}

/// The two CNOTs preparing the GHZ register from `|+>|00>`, in execution order.
pub fn ghz_prep_gates() -> GateSequence {
    GateSequence::new(vec![GatePlacement::cnot(0, 1), GatePlacement::cnot(0, 2)])
}

/// GHZ register obtained by running the two depolarizing CNOTs on `|+>|00>`.
pub fn ghz_prep_circuit(beta: f64) -> Result<DensityOperator> {
    let plus_zero_zero = PureState::basis(&[0, 0, 0])
        .apply_gate(&GatePlacement::single(Gate::Hadamard, 0))?;
    crate::channels::concat_exact(
        &DensityOperator::pure(&plus_zero_zero),
        &ghz_prep_gates(),
        beta,
    )
}

/// One physical gate of a teleported CNOT together with the measurement that follows it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeleportedGate {
    pub gate: GatePlacement,
    /// Resource qubit measured after the gate.
    pub measured: usize,
    pub basis: Basis,
    /// Pauli applied when the outcome is 1.
    pub correction: GatePlacement,
}

/// The six gates of the three teleported CNOTs on the 12-qubit register.
///
/// Layout: code qubits 0..6, resource pair `k` on qubits `(6 + 2k, 7 + 2k)`,
/// where `6 + 2k` sits at station `i` and `7 + 2k` at station `i+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TeleportedCnotCircuit {
    steps: Vec<TeleportedGate>,
}

impl TeleportedCnotCircuit {
    pub fn steps(&self) -> &[TeleportedGate] {
        &self.steps
    }

    pub fn gates(&self) -> GateSequence {
        self.steps.iter().map(|s| s.gate).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn measurement_count(&self) -> usize {
        self.steps.len()
    }

    pub fn num_qubits(&self) -> usize {
        FULL_REGISTER_QUBITS
    }
}

/// Steps of teleported CNOT `k` for a resource pair on `(local, remote)`.
fn teleported_cnot(k: usize, local: usize, remote: usize) -> [TeleportedGate; 2] {
    let control = k;
    let target = BLOCK + k;
    [
        TeleportedGate {
            gate: GatePlacement::cnot(control, local),
            measured: local,
            basis: Basis::Z,
            correction: GatePlacement::single(Gate::PauliX, target),
        },
        TeleportedGate {
            gate: GatePlacement::cnot(remote, target),
            measured: remote,
            basis: Basis::X,
            correction: GatePlacement::single(Gate::PauliZ, control),
        },
    ]
}

pub fn teleported_cnot_sequence() -> TeleportedCnotCircuit {
    let steps = (0..BLOCK)
        .flat_map(|k| teleported_cnot(k, CODE_QUBITS + 2 * k, CODE_QUBITS + 2 * k + 1))
        .collect();
    TeleportedCnotCircuit { steps }
}

/// Noisy encoded Bell pair on 6 qubits (block at station `i` first).
#[derive(Clone, Debug)]
pub struct EncodedPair {
    pub state: DensityOperator,
    pub beta: f64,
    pub f0: f64,
}

/// Measures `step.measured`, applies the classically controlled correction and drops the qubit.
///
/// The correction must act on a lower-indexed qubit so its index survives the removal.
fn measure_and_correct(m: &DMatrix<C64>, num_qubits: usize, step: &TeleportedGate) -> DMatrix<C64> {
    debug_assert!(step.correction.qubits()[0] < step.measured);
    let zero = project_out(m, num_qubits, step.measured, step.basis, 0);
    let one = project_out(m, num_qubits, step.measured, step.basis, 1);
    zero + conjugate(&one, num_qubits - 1, &step.correction)
}

/// Steps of teleported CNOT `k` relabelled onto an 8-qubit register whose resource pair is `(6, 7)`.
fn local_steps(k: usize) -> [TeleportedGate; 2] {
    teleported_cnot(k, CODE_QUBITS, CODE_QUBITS + 1)
}

/// Runs one branch of the first-order expansion one teleported CNOT at a time.
fn encode_branch(start: &DMatrix<C64>, resource: &DensityOperator, kind: BranchKind) -> DMatrix<C64> {
    let n = CODE_QUBITS + 2;
    (0..BLOCK).fold(start.clone(), |code, k| {
        let code = DensityOperator::from_raw(CODE_QUBITS, code);
        let mut m = tensor(&code, resource)
            .expect("8-qubit register is within the cap")
            .into_matrix();
        let steps = local_steps(k);
        for (j, step) in steps.iter().enumerate() {
            m = apply_in_branch(&m, n, &step.gate, 2 * k + j, kind);
        }
        // remote half (qubit 7) first, so the local half keeps index 6
        let m = measure_and_correct(&m, n, &steps[1]);
        measure_and_correct(&m, n - 1, &steps[0])
    })
}

fn encoding_input(beta: f64) -> Result<DensityOperator> {
    tensor(&ghz_prep(beta)?, &DensityOperator::basis_projector(&[0; BLOCK]))
}

/// The noisy encoded pair `rho_enc` for gate error `beta` and source fidelity `f0`.
pub fn encoded_pair(beta: f64, f0: f64) -> Result<EncodedPair> {
    let beta = NoiseParams::new(beta)?.beta();
    let f0 = SourceParams::new(f0)?.f0();
    let start = encoding_input(beta)?.into_matrix();
    let resource = source_state(f0)?;
    let gates = teleported_cnot_sequence().len();
    let dim = 1 << CODE_QUBITS;
    let mut acc = DMatrix::zeros(dim, dim);
    for branch in first_order_branches(gates, beta)? {
        if branch.weight == 0.0 {
            continue;
        }
        match branch.kind {
            // measuring and correcting the maximally mixed register leaves it maximally mixed
            BranchKind::Remainder => {
                for i in 0..dim {
                    acc[(i, i)] += C64::from(branch.weight / dim as f64);
                }
            }
            kind => acc += encode_branch(&start, &resource, kind) * C64::from(branch.weight),
        }
    }
    Ok(EncodedPair {
        state: DensityOperator::from_raw(CODE_QUBITS, acc),
        beta,
        f0,
    })
}

/// Measurement schedule for the 12-qubit reference evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Each measurement directly after its gate.
    Interleaved,
    /// All six gates first, then all six measurements.
    GatesFirst,
}

/// Measures and corrects every resource qubit of a 12-qubit operator, highest index first.
pub fn measure_resources(rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.num_qubits() != FULL_REGISTER_QUBITS {
        return Err(Error::WrongQubitCount {
            expected: FULL_REGISTER_QUBITS,
            actual: rho.num_qubits(),
        });
    }
    let mut steps = teleported_cnot_sequence().steps;
    steps.sort_by_key(|s| std::cmp::Reverse(s.measured));
    let mut n = FULL_REGISTER_QUBITS;
    let mut m = rho.matrix().clone();
    for step in &steps {
        m = measure_and_correct(&m, n, step);
        n -= 1;
    }
    Ok(DensityOperator::from_raw(n, m))
}

/// Reference evaluation of `rho_enc` on the full 12-qubit register (4096 dimensions).
///
/// Slow; intended for cross-checking [`encoded_pair`].
pub fn encoded_pair_full_register(beta: f64, f0: f64, schedule: Schedule) -> Result<EncodedPair> {
    let beta = NoiseParams::new(beta)?.beta();
    let f0 = SourceParams::new(f0)?.f0();
    let resource = source_state(f0)?;
    let start = (0..BLOCK).try_fold(encoding_input(beta)?, |acc, _| tensor(&acc, &resource))?;
    let circuit = teleported_cnot_sequence();
    let dim = 1 << CODE_QUBITS;
    let mut acc = DMatrix::zeros(dim, dim);
    for branch in first_order_branches(circuit.len(), beta)? {
        if branch.weight == 0.0 {
            continue;
        }
        let out = match branch.kind {
            BranchKind::Remainder => {
                measure_resources(&DensityOperator::maximally_mixed(FULL_REGISTER_QUBITS)?)?
                    .into_matrix()
            }
            kind => run_full_branch(start.matrix(), &circuit, kind, schedule),
        };
        acc += out * C64::from(branch.weight);
    }
    Ok(EncodedPair {
        state: DensityOperator::from_raw(CODE_QUBITS, acc),
        beta,
        f0,
    })
}

fn run_full_branch(
    start: &DMatrix<C64>,
    circuit: &TeleportedCnotCircuit,
    kind: BranchKind,
    schedule: Schedule,
) -> DMatrix<C64> {
    let n = FULL_REGISTER_QUBITS;
    match schedule {
        Schedule::GatesFirst => {
            let m = circuit
                .steps()
                .iter()
                .enumerate()
                .fold(start.clone(), |m, (idx, s)| apply_in_branch(&m, n, &s.gate, idx, kind));
            measure_resources(&DensityOperator::from_raw(n, m))
                .expect("register size checked")
                .into_matrix()
        }
        Schedule::Interleaved => {
            // Measured qubits are kept (dephased and corrected) so that later gate
            // indices stay valid; they are traced out at the end.
            let mut m = start.clone();
            for (idx, step) in circuit.steps().iter().enumerate() {
                m = apply_in_branch(&m, n, &step.gate, idx, kind);
                m = dephase_and_correct(&m, n, step);
            }
            let keep: Vec<usize> = (0..CODE_QUBITS).collect();
            crate::qstate::reduce(&m, n, &keep)
        }
    }
}

/// Non-selective measurement of `step.measured` with its correction, keeping the qubit.
fn dephase_and_correct(m: &DMatrix<C64>, n: usize, step: &TeleportedGate) -> DMatrix<C64> {
    let q = step.measured;
    let rotate = |m: &DMatrix<C64>| match step.basis {
        Basis::Z => m.clone(),
        Basis::X => conjugate(m, n, &GatePlacement::single(Gate::Hadamard, q)),
    };
    // In the measurement basis: keep the block diagonal in qubit q, correct the outcome-1 block.
    let r = rotate(m);
    let mask = bit_mask(n, q);
    let dim = r.nrows();
    let mut zero = DMatrix::zeros(dim, dim);
    let mut one = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            match (i & mask != 0, j & mask != 0) {
                (false, false) => zero[(i, j)] = r[(i, j)],
                (true, true) => one[(i, j)] = r[(i, j)],
                _ => {}
            }
        }
    }
    rotate(&(zero + conjugate(&one, n, &step.correction)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{overlap, partial_trace};

    fn basis_weight(rho: &DensityOperator, i: usize) -> f64 {
        rho.entry(i, i).re
    }

    #[test]
    fn ghz_prep_limits() {
        let ghz = DensityOperator::pure(&PureState::ghz(3));
        assert!(ghz_prep(0.0).unwrap().max_abs_diff(&ghz) < 1e-15);
        assert!(ghz_prep(1.2).is_err());
    }

    #[test]
    fn ghz_prep_printed_weights() {
        let rho = ghz_prep(0.1).unwrap();
        assert!((basis_weight(&rho, 0b000) - 0.44).abs() < 1e-14);
        assert!((rho.entry(0b000, 0b111).re - 0.405).abs() < 1e-14);
        assert!((basis_weight(&rho, 0b101) - 0.035).abs() < 1e-14);
        assert!((basis_weight(&rho, 0b001) - 0.0125).abs() < 1e-14);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_closed_form_matches_faulty_circuit() {
        for beta in [0.0, 0.01, 0.05, 0.1, 0.5, 1.0] {
            let closed = ghz_prep(beta).unwrap();
            let circuit = ghz_prep_circuit(beta).unwrap();
            assert!(
                closed.max_abs_diff(&circuit) < 1e-12,
                "beta {beta}: {}",
                closed.max_abs_diff(&circuit)
            );
        }
    }

    #[test]
    fn sequence_shape() {
        let c = teleported_cnot_sequence();
        assert_eq!(c.len(), 6);
        assert_eq!(c.measurement_count(), 6);
        assert_eq!(c.gates().len(), 6);
        // every gate acts on its own pair of qubits
        let mut used: Vec<usize> = c.gates().iter().flat_map(|g| g.qubits().to_vec()).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 12);
        for s in c.steps() {
            s.gate.validate(FULL_REGISTER_QUBITS).unwrap();
            assert!(s.gate.qubits().contains(&s.measured));
        }
    }

    #[test]
    fn ideal_encoding_is_exact() {
        let enc = encoded_pair(0.0, 1.0).unwrap();
        let target = DensityOperator::pure(&encoded_phi_plus());
        assert!(enc.state.max_abs_diff(&target) < 1e-14);
    }

    #[test]
    fn source_noise_lowers_overlap() {
        let f = overlap(&encoded_pair(0.0, 0.98).unwrap().state, &encoded_phi_plus()).unwrap();
        assert!(f < 1.0 && f > 0.9, "{f}");
    }

    #[test]
    fn overlap_decreases_with_beta() {
        let target = encoded_phi_plus();
        let f: Vec<f64> = [0.0, 0.01, 0.02]
            .iter()
            .map(|&b| overlap(&encoded_pair(b, 1.0).unwrap().state, &target).unwrap())
            .collect();
        assert!(f[0] >= f[1] && f[1] >= f[2], "{f:?}");
        assert!((f[1] - 0.936_85).abs() < 1e-5, "{}", f[1]);
    }

    #[test]
    fn encoded_pair_is_a_state() {
        for (b, f0) in [(0.0, 0.25), (0.01, 0.99), (0.3, 0.7), (1.0, 0.0)] {
            let enc = encoded_pair(b, f0).unwrap();
            assert!((enc.state.trace() - 1.0).abs() < 1e-12);
            assert!(enc.state.min_eigenvalue() > -1e-12);
        }
    }

    #[test]
    fn blocks_hold_ghz_marginals_ideally() {
        let enc = encoded_pair(0.0, 1.0).unwrap();
        let left = partial_trace(&enc.state, &[0, 1, 2]).unwrap();
        let expect = DensityOperator::mixture(&[
            (0.5, &DensityOperator::basis_projector(&[0, 0, 0])),
            (0.5, &DensityOperator::basis_projector(&[1, 1, 1])),
        ])
        .unwrap();
        assert!(left.max_abs_diff(&expect) < 1e-14);
    }
}

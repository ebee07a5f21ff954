//! Decoding of the encoded pair back to two physical qubits.
//!
//! Each side runs CNOT(0 -> 2), CNOT(0 -> 1) on its block, measures the two
//! targets in Z and flips the remaining qubit on syndrome `11`.

use nalgebra::DMatrix;

use crate::channels::{apply_in_branch, concat_exact, first_order_weights, BranchKind};
use crate::encgen::{encoded_pair, EncodedPair, BLOCK, CODE_QUBITS};
use crate::encswap::{RhoSWeights, SwapModel};
use crate::error::{Error, Result};
use crate::qstate::{
    bell_diag_coeffs, bit_mask, uhlmann_fidelity, BellDiagCoeffs, DensityOperator, GatePlacement,
    GateSequence, C64,
};

/// Number of two-qubit gates in the decoding circuit.
pub const DECODE_GATES: usize = 4;

/// Two-qubit states off the Bell diagonal by more than this are rejected as final states.
pub const BELL_DIAGONAL_TOL: f64 = 1e-10;

/// The four decoding CNOTs in execution order (Alice's block, then Bob's).
pub fn decode_gates() -> GateSequence {
    (0..2)
        .flat_map(|side| {
            let base = side * BLOCK;
            [
                GatePlacement::cnot(base, base + 2),
                GatePlacement::cnot(base, base + 1),
            ]
        })
        .collect()
}

/// Z-measures qubits 1, 2, 4, 5 and applies the syndrome-`11` flips, keeping qubits 0 and 3.
fn measure_syndromes(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = CODE_QUBITS;
    let bit = |i: usize, q: usize| usize::from(i & bit_mask(n, q) != 0);
    let syndrome_mask: usize = [1, 2, 4, 5].iter().map(|&q| bit_mask(n, q)).sum();
    // kept two-qubit index after correction
    let kept = |i: usize| -> usize {
        let alice = bit(i, 0) ^ (bit(i, 1) & bit(i, 2));
        let bob = bit(i, 3) ^ (bit(i, 4) & bit(i, 5));
        (alice << 1) | bob
    };
    let dim = m.nrows();
    let mut out = DMatrix::zeros(4, 4);
    for j in 0..dim {
        for i in 0..dim {
            if (i & syndrome_mask) == (j & syndrome_mask) {
                out[(kept(i), kept(j))] += m[(i, j)];
            }
        }
    }
    out
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

fn decode_branch(rho: &DensityOperator, kind: BranchKind) -> DMatrix<C64> {
    let m = decode_gates()
        .iter()
        .enumerate()
        .fold(rho.matrix().clone(), |m, (idx, g)| {
            apply_in_branch(&m, CODE_QUBITS, g, idx, kind)
        });
    measure_syndromes(&m)
}

/// Decoding with perfect gates.
pub fn decode_circuit(rho: &DensityOperator) -> Result<DensityOperator> {
    require_code_register(rho)?;
    Ok(DensityOperator::from_raw(2, decode_branch(rho, BranchKind::Perfect)))
}

/// Decoding with exactly one faulty gate, averaged over which gate fails.
pub fn decode_one_faulty(rho: &DensityOperator) -> Result<DensityOperator> {
    require_code_register(rho)?;
    let mut acc = DMatrix::zeros(4, 4);
    for a in 0..DECODE_GATES {
        acc += decode_branch(rho, BranchKind::Faulty(a)) / C64::from(DECODE_GATES as f64);
    }
    Ok(DensityOperator::from_raw(2, acc))
}

/// Decoding with every gate depolarizing independently (no first-order truncation).
pub fn decode_exact(rho: &DensityOperator, beta: f64) -> Result<DensityOperator> {
    require_code_register(rho)?;
    let noisy = concat_exact(rho, &decode_gates(), beta)?;
    Ok(DensityOperator::from_raw(2, measure_syndromes(noisy.matrix())))
}

/// `1/2 (Pi_00 + Pi_11)` on two qubits.
fn dephased_pair() -> BellDiagCoeffs {
    BellDiagCoeffs::new(0.5, 0.5, 0.0, 0.0)
}

fn white() -> BellDiagCoeffs {
    BellDiagCoeffs::new(0.25, 0.25, 0.25, 0.25)
}

fn phi_plus() -> BellDiagCoeffs {
    BellDiagCoeffs::new(1.0, 0.0, 0.0, 0.0)
}

fn combine(terms: &[(f64, BellDiagCoeffs)]) -> BellDiagCoeffs {
    terms.iter().fold(BellDiagCoeffs::new(0.0, 0.0, 0.0, 0.0), |acc, (w, c)| {
        BellDiagCoeffs::new(
            acc.phi_plus + w * c.phi_plus,
            acc.phi_minus + w * c.phi_minus,
            acc.psi_plus + w * c.psi_plus,
            acc.psi_minus + w * c.psi_minus,
        )
    })
}

/// Output of the one-faulty decoder on both `|phi~+>` and `1/2 (Pi_000000 + Pi_111111)`.
pub fn rho_tilde_prime_coeffs() -> BellDiagCoeffs {
    BellDiagCoeffs::new(5.0 / 16.0, 5.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0)
}

/// `1/2 {[3/8 (Pi_00 + Pi_11) + 1/8 (Pi_01 + Pi_10)] + 1_4/4}`.
pub fn rho_tilde_prime() -> DensityOperator {
    let d = |bits: &[u8]| DensityOperator::basis_projector(bits);
    let white = DensityOperator::maximally_mixed(2).expect("two qubits");
    DensityOperator::mixture(&[
        (3.0 / 16.0, &d(&[0, 0])),
        (3.0 / 16.0, &d(&[1, 1])),
        (1.0 / 16.0, &d(&[0, 1])),
        (1.0 / 16.0, &d(&[1, 0])),
        (0.5, &white),
    ])
    .expect("equal dimensions")
}

const COMPLEMENT: f64 = 63.0;
const CODE_DIM: f64 = 64.0;

fn check_dec(model: &SwapModel, r: u32, c: BellDiagCoeffs) -> Result<BellDiagCoeffs> {
    let min_eigenvalue = c.as_array().into_iter().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -1e-12 {
        return Err(Error::ModelBreakdown {
            beta: model.beta,
            f0: model.f0,
            swaps: r,
            min_eigenvalue,
        });
    }
    Ok(c)
}

/// Bell coefficients of the perfectly decoded swapped state.
pub fn decode_perfect_coeffs(model: &SwapModel, r: u32) -> Result<BellDiagCoeffs> {
    let p = model.chain_success(r)?;
    let w = RhoSWeights::new(model.beta, r)?;
    let c = combine(&[
        (p * w.perfect - (1.0 - p) / COMPLEMENT, phi_plus()),
        (p * w.dephased, dephased_pair()),
        (p * w.remainder + (1.0 - p) * CODE_DIM / COMPLEMENT, white()),
    ]);
    check_dec(model, r, c)
}

/// Bell coefficients of the swapped state decoded with one faulty gate.
pub fn decode_nonideal_coeffs(model: &SwapModel, r: u32) -> Result<BellDiagCoeffs> {
    let p = model.chain_success(r)?;
    let w = RhoSWeights::new(model.beta, r)?;
    let kept = w.perfect + w.dephased;
    let c = combine(&[
        (p * kept, rho_tilde_prime_coeffs()),
        (p * (1.0 - kept), white()),
        ((1.0 - p) / COMPLEMENT * CODE_DIM, white()),
        (-(1.0 - p) / COMPLEMENT, rho_tilde_prime_coeffs()),
    ]);
    check_dec(model, r, c)
}

fn assemble(beta: f64, perfect: BellDiagCoeffs, faulty: BellDiagCoeffs) -> BellDiagCoeffs {
    let (w_perfect, w_one) = first_order_weights(DECODE_GATES, beta);
    combine(&[
        (w_perfect, perfect),
        (w_one, faulty),
        ((1.0 - w_perfect - w_one).max(0.0), white()),
    ])
}

/// Bell coefficients of the final two-qubit state after `r` swaps (`r >= 1`).
pub fn final_coeffs(model: &SwapModel, r: u32) -> Result<BellDiagCoeffs> {
    Ok(assemble(
        model.beta,
        decode_perfect_coeffs(model, r)?,
        decode_nonideal_coeffs(model, r)?,
    ))
}

pub fn decode_perfect(beta: f64, f0: f64, r: u32) -> Result<DensityOperator> {
    decode_perfect_coeffs(&SwapModel::new(beta, f0)?, r)?.to_operator()
}

pub fn decode_nonideal(beta: f64, f0: f64, r: u32) -> Result<DensityOperator> {
    decode_nonideal_coeffs(&SwapModel::new(beta, f0)?, r)?.to_operator()
}

/// Final Bell-diagonal pair shared by the two end stations.
#[derive(Clone, Debug)]
pub struct FinalPair {
    pub state: DensityOperator,
    pub coeffs: BellDiagCoeffs,
    pub beta: f64,
    pub f0: f64,
    /// Number of swaps entering the state; 0 for a single encoded link.
    pub swaps: u32,
}

impl FinalPair {
    pub fn from_coeffs(coeffs: BellDiagCoeffs, beta: f64, f0: f64, swaps: u32) -> Result<Self> {
        Ok(Self {
            state: coeffs.to_operator()?,
            coeffs,
            beta,
            f0,
            swaps,
        })
    }
}

/// Bell coefficients of a single encoded link decoded directly, without any swap.
///
/// The closed forms need at least one swap; here the decoder is simulated on
/// `rho_enc` with the same first-order weighting.
pub fn final_coeffs_unswapped(enc: &EncodedPair) -> Result<BellDiagCoeffs> {
    let perfect = bell_diag_coeffs(&decode_circuit(&enc.state)?)?.coeffs;
    let faulty = bell_diag_coeffs(&decode_one_faulty(&enc.state)?)?.coeffs;
    Ok(assemble(enc.beta, perfect, faulty))
}

/// Final state of a single encoded link; see [`final_coeffs_unswapped`].
pub fn final_state_unswapped(beta: f64, f0: f64) -> Result<FinalPair> {
    let enc = encoded_pair(beta, f0)?;
    FinalPair::from_coeffs(final_coeffs_unswapped(&enc)?, enc.beta, enc.f0, 0)
}

/// Final state for `r` swaps; `r = 0` falls back to [`final_state_unswapped`].
pub fn final_state(beta: f64, f0: f64, r: u32) -> Result<FinalPair> {
    if r == 0 {
        return final_state_unswapped(beta, f0);
    }
    let model = SwapModel::new(beta, f0)?;
    FinalPair::from_coeffs(final_coeffs(&model, r)?, model.beta, model.f0, r)
}

/// Fidelity between the first-order final state and an exact-noise decode of the swapped state.
pub fn validate_first_order_vs_exact(beta: f64, f0: f64, r: u32) -> Result<f64> {
    let model = SwapModel::new(beta, f0)?;
    let first_order = FinalPair::from_coeffs(final_coeffs(&model, r)?, beta, f0, r)?;
    let exact = decode_exact(&model.swapped_state(r)?, beta)?;
    uhlmann_fidelity(&first_order.state, &exact)
}

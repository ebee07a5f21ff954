use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the dense-storage cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix of size {rows}x{cols} is not a square power-of-two operator")]
    NotQubitOperator { rows: usize, cols: usize },

    #[error("qubit index {qubit} is outside a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("qubit index {qubit} appears more than once")]
    DuplicateQubit { qubit: usize },

    #[error("operator dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("partial trace over the whole register leaves only the scalar {trace}")]
    DegenerateTrace { trace: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator trace {trace} differs from 1")]
    BadTrace { trace: f64 },

    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state vector norm {norm} differs from 1")]
    NotNormalized { norm: f64 },

    #[error("{name} = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("gate sequence is empty")]
    EmptySequence,

    #[error("noise maps act on two-qubit gates only, got {0}")]
    NotTwoQubitGate(String),

    #[error("expected a {expected}-qubit operator, got {actual} qubits")]
    WrongQubitCount { expected: usize, actual: usize },

    #[error("deduplication produced {found} correctable states, expected {expected}")]
    CorrectableStateCount { found: usize, expected: usize },

    #[error("P0 = {0} gives a divergent waiting time")]
    ZeroTransmission(f64),

    #[error("closed-form state is not positive at beta = {beta}, F0 = {f0}, exponent {swaps} (smallest eigenvalue {min_eigenvalue:e})")]
    ModelBreakdown {
        beta: f64,
        f0: f64,
        swaps: u32,
        min_eigenvalue: f64,
    },

    #[error("no sign change of the secret fraction in [{lo}, {hi}]")]
    NoThresholdInBracket { lo: f64, hi: f64 },

    #[error("{0} is not of the form 2^N - 1")]
    NotStationCount(u64),

    #[error("empty nesting range")]
    EmptyNestingRange,
}

/// Checks `lo <= value <= hi`, rejecting NaN.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<f64> {
    if value.is_nan() || value < lo || value > hi {
        return Err(Error::ParameterOutOfRange { name, value, range });
    }
    Ok(value)
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0, "[0, 1]")
}

//! Encoded quantum repeater model: noisy GHZ encoding of Bell pairs, encoded
//! entanglement swapping, decoding, and the resulting secret key rates.

pub mod channels;
pub mod decode;
pub mod encgen;
pub mod encswap;
pub mod error;
pub mod qstate;
pub mod rates;

pub use channels::{NoiseParams, SourceParams};
pub use decode::FinalPair;
pub use encgen::EncodedPair;
pub use encswap::{CorrectableStateSet, ErrorPair, PauliCombo, SwapModel};
pub use error::{Error, Result};
pub use qstate::{
    BellDecomposition, BellDiagCoeffs, BellState, DensityOperator, Gate, GatePlacement,
    GateSequence, PureState, C64,
};
pub use rates::{
    ErrorRates, LinkParams, NestingRange, RateModel, RateReport, SwapExponent, T0Mode,
};

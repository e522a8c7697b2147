//! Differential space-time modulation on minimum-decoding-complexity
//! quasi-orthogonal STBC.
//!
//! * [`stbc`] builds the codes and their rank/determinant diagnostics.
//! * [`constellation`] and [`design`] produce quasi-unitary symbol sets.
//! * [`codec`] encodes differentially and decodes symbol by symbol.
//! * [`channel`] runs block-error-rate sweeps over quasi-static Rayleigh fading.
//! * [`cli`] holds the command implementations behind the `dstm` binary.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod constellation;
pub mod design;
pub mod error;
pub mod linalg;
pub mod stbc;

pub use error::{Error, Result};
pub use linalg::{ComplexMat, C64};

//! Privacy amplification by shuffling for single-message protocols.
//!
//! The crate covers the local randomizers, their blanket decompositions,
//! certified `(ε, δ)` bounds for the shuffled mechanism, exact small-instance
//! oracles, the real-summation protocol and a Monte Carlo harness.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplification;
pub mod blanket;
mod error;
pub mod histogram;
pub mod numeric;
pub mod oracle;
pub mod randomizers;
pub mod sim;
pub mod summation;

pub use error::{Error, Result};
pub use histogram::Histogram;

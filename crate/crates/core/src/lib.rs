//! Monostatic joint communication and sensing (JCAS) laboratory.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod waveform;
pub mod channel;
pub mod classic;
pub mod neural;
pub mod training;
pub mod eval;
pub mod cli;

pub use error::{Error, Result};

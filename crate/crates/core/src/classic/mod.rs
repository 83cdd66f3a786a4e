//! Model-based baselines and bounds.

mod bound;
mod demap;
mod detect;
mod esprit;

pub use bound::{crb, CrbForm, CrbInputs};
pub use demap::{bce_bits, bmi_estimate, exact_llr, exact_llr_received, mmse_equalize, softplus};
pub use detect::{np_detect, np_threshold, DetectionDecision};
pub use esprit::{esprit_aoa, EspritEstimate};

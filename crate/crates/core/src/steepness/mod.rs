//! Simultaneous-Diophantine-Morse checks over rational subspaces, steepness
//! witnesses along curves and Monte Carlo estimates of the bad-shift measure.
//!
//! A check over sampled points can refute the condition but never prove it;
//! reports say "refuted" or "no violation found at resolution".

mod frames;
mod prevalence;
mod sdm;
mod witness;

use thiserror::Error;

pub use frames::{all_frames, enumerate_subspaces, primitive_vectors, SubspaceFrame};
pub use prevalence::{prevalence_mc, sample_shift, PrevalenceRow, PrevalenceTable};
pub use sdm::{hessian_margin, sdm_check, ActionFunction, SdmOptions, SdmReport, SdmStatus, SubspaceRecord};
pub use witness::{segment, steep_witness, Counterexample, CurveWitness, WitnessOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteepnessError {
    #[error("h has angular modes; SDM checks need an integrable h")]
    NotIntegrable,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

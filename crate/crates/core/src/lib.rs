//! Numerical laboratory for exponential stability of near-integrable
//! Hamiltonians with periodic-frequency averaging.
//!
//! Modules, bottom-up:
//! - [`diophantine`]: periodic vectors, Dirichlet approximation, resonance modules.
//! - [`trig_hamiltonian`]: the trig-polynomial algebra, norms, averaging and normal forms.
//! - [`steepness`]: SDM checks over rational subspaces, witnesses, prevalence.
//! - [`dynamics`]: splitting integrators, drift and escape times, resonance traces.
//! - [`exponents`]: stability exponents and the smallness ledger.

pub mod constants;
pub mod diophantine;
pub mod trig_hamiltonian;
pub mod steepness;
pub mod dynamics;
pub mod exponents;

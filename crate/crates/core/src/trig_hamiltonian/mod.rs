//! Hamiltonians that are polynomial in the actions and trigonometric
//! polynomials in the angles, with the operations of periodic averaging.

mod algebra;
mod averaging;
mod normal_form;
mod norms;

pub use algebra::{poisson_bracket, AlgebraError, HamiltonianJson, Mode, TermJson, TrigPolyHamiltonian};
pub use averaging::{average_along, homological_solve, homological_solve_report};
pub use normal_form::{
    averaging_step, check_domains, lie_transform, normal_form, split_hamiltonian, AveragingStep, NormalFormError,
    two_frequency_case, NormalFormOptions, NormalFormResult, StageSummary, StepParams, StepRecord,
};
pub use norms::{
    derivative_majorants, majorant_local, majorant_norm, term_vf, weighted_vf_local, weighted_vf_norm, Anchor,
    AnalyticDomain, DomainError,
};

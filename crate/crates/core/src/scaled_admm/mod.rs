//! Scaled ADMM for equality-constrained QPs: explicit iterations, the constraint scaling
//! `R`, the linear iteration matrix and its closed-form spectrum.

mod engine;
mod spectrum;

pub use engine::{
    admm_iterate, build_scaling, iteration_matrix, AdmmEngine, AdmmTrace, EqualityQp, IterationMatrix, RunOptions,
    ScaledProblem,
};
pub use spectrum::{
    closed_form_eigenvalues, contraction_factor, empirical_factor, f_rho, phi_magnitude, recursion_factor, EigenPair,
    MIN_FIT_SAMPLES,
};

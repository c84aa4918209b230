//! Optimal scaling: `κ`, the optimal step-size and convergence factor, the iteration
//! matrix's second-largest eigenvalue modulus, and edge-weight optimization.

mod formulas;
mod pipeline;
mod weights;

pub use formulas::{
    kappa_for, optimal_rho, predicted_factor, second_largest_magnitude, worst_lambda, SpectralSummary,
};
pub use pipeline::{optimal_scaling_pipeline, PlanFile, ScalingPlan};
pub use weights::{
    complement_predicate, connectivity_lmi, degree_complement_predicate, lmi_certifies_connected, optimize_weights,
    BisectionProbe, WeightOptOptions, WeightOptResult,
};

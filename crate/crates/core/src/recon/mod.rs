//! TV-regularized reconstruction.

mod solver;
mod tv;

pub use solver::{
    data_gradient, data_term, least_squares_baseline, least_squares_cg, lipschitz_estimate,
    operator_norm_sq, solve, ObjectiveSample, ReconResult, SolverConfig, StepRule,
};
pub use tv::{divergence_op, gradient_op, tv_prox, tv_value, GradientField, TvKind};

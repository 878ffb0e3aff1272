//! Natural cubic smoothing splines: `O(K)` fitting for a given smoothing
//! parameter, REML selection through the mixed-model representation, and
//! evaluation anywhere on the shared domain.

mod band;
mod fit;
mod kernel;
mod reml;

pub use fit::{fit_given_lambda, fit_on_domain, SplineFit};
pub use kernel::{kernel_entry, MixedModelParts};
pub use reml::{
    coarse_grid, penalty_lambda, restricted_loglik, select_for_subject, select_lambda_reml,
    RemlSelection, COARSE_GRID_POINTS, LOG10_LAMBDA_MAX, LOG10_LAMBDA_MIN, REFINE_TOLERANCE,
};

//! Computable pieces of the risk-bound machinery: tessellations, noise
//! weights, interpolating matrices, effective-sparsity bounds,
//! antiprojections, mesh grids and tuning schedules.

pub mod antiprojection;
pub mod mesh;
pub mod schedules;
pub mod sparsity;
pub mod tessellation;
pub mod weights;

pub use antiprojection::{
    antiprojection_bound, antiprojection_exact, antiprojection_exact_centered,
    antiprojection_exact_points, ANTIPROJECTION_SIZE_CAP,
};
pub use mesh::{build_mesh_grid, mesh_antiprojection_bound, MeshGrid};
pub use schedules::{
    bound_report, fast_lambda, main_effect_lambda, oracle_rhs_fast, oracle_rhs_slow,
    slow_rate_config, thm4_estimation_term, thm4_lambda, universal_lambda, BoundReport,
    OracleRhs, SlowRateConfig,
};
pub use sparsity::{
    effective_sparsity_sampled, gamma_bound_formula, gamma_bound_from_areas,
    gamma_exact_from_w, sparsity_objective,
};
pub use tessellation::{
    build_tessellation, off_active_abs_sum, ActiveSet, TessRect, Tessellation,
};
pub use weights::{
    gamma_tilde, interpolating_matrix, noise_weights, InterpolatingMatrix, WeightField,
};

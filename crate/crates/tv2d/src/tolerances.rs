//! Shared numerical tolerances.
//!
//! Every threshold used by the library and its verification suites is
//! declared here once, so that tests, suite runners and the CLI agree on
//! what "exact" means on f64 data of unit scale.

/// Exact algebraic identities (orthogonality, round trips, adjointness)
/// on unit-scale data.
pub const EXACT_IDENTITY: f64 = 1e-10;

/// Linearity checks, which involve one extra rounding step only.
pub const LINEARITY: f64 = 1e-12;

/// Default KKT residual at which an interaction solve counts as converged.
pub const KKT_DEFAULT: f64 = 1e-6;

/// Default duality gap for the analysis-form reference solver.
pub const DUALITY_GAP_DEFAULT: f64 = 1e-8;

/// Maximum absolute pixel difference between the synthesis and analysis
/// routes on the same instance.
pub const SOLVER_AGREEMENT: f64 = 1e-6;

/// Additive slack when checking the basic inequality against a solver
/// output that is itself only accurate to a small KKT residual.
pub const BASIC_INEQUALITY_SLACK: f64 = 1e-8;

/// Floating-point guard when checking closed-form inequalities that can
/// hold with equality.
pub const INEQUALITY_FP_SLACK: f64 = 1e-12;

/// Max |row sum| / |col sum| (relative to scale) accepted as "doubly
/// centered" by the interaction solver.
pub const CENTERING_TOL: f64 = 1e-8;

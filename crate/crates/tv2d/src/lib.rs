//! Two-dimensional total variation image denoising on the total
//! discrete derivative.
//!
//! The estimator splits an image into its ANOVA components, denoises the
//! main effects with an exact 1D fused lasso and the interaction terms
//! with an l1 penalty on the total derivative, solved in synthesis form
//! over a dictionary of half-interval indicator atoms. Alongside the
//! estimator the crate carries the machinery that certifies it: noise
//! weights and interpolating matrices over rectangular tessellations,
//! effective-sparsity bounds, antiprojection norms, mesh grids, tuning
//! schedules and a simulation harness for the near-parametric rate
//! experiment.
//!
//! Entry points:
//! - [`solvers::denoise`] for the full four-part estimator;
//! - [`solvers::interaction_lasso`] for the interaction block alone;
//! - [`experiments::run_rate_simulation`] for the rate experiment;
//! - [`suites::run_suite`] for the named verification suites.

pub mod dictionary;
mod error;
pub mod experiments;
pub mod image;
pub mod solvers;
pub mod suites;
pub mod theory;
pub mod tolerances;

pub use error::{Axis, Error, Result};
pub use image::{AnovaParts, DerivativeField, Image};

//! Monte-Carlo frequency checks of the probabilistic oracle bounds.

use crate::error::{Error, Result};
use crate::experiments::{generate_truth, noisy_observation, substream, truth_jumps};
use crate::image::interaction_part;
use crate::solvers::{interaction_lasso_with, InteractionOptions};
use crate::theory::mesh::build_mesh_grid;
use crate::theory::schedules::{
    fast_lambda, oracle_rhs_fast, oracle_rhs_slow, slow_rate_config, thm4_estimation_term,
    thm4_lambda,
};
use crate::theory::tessellation::{build_tessellation, ActiveSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which oracle bound to stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleTheorem {
    /// Regular-grid special case on a square image.
    Thm4,
    /// General fast-rate bound through the tessellation machinery.
    FastMain,
    /// Slow-rate bound with the data-driven mesh schedule.
    SlowMesh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub theorem: OracleTheorem,
    pub size: usize,
    pub reps: usize,
    pub lambda: f64,
    pub rhs: f64,
    pub violations: usize,
    pub rate: f64,
    /// Nominal failure mass of the bound itself.
    pub nominal_level: f64,
}

/// Runs `reps` noisy instances of the indicator truth at the theorem's
/// recommended tuning and counts how often the realized interaction mse
/// exceeds the theorem's right-hand side (computed with the
/// well-specified oracle `g = f0~`, `S` the true jumps).
pub fn verify_oracle_bound(
    theorem: OracleTheorem,
    size: usize,
    sigma: f64,
    reps: usize,
    seed: u64,
    tol: f64,
) -> Result<ViolationReport> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    let f0 = generate_truth(size, size)?;
    let f_tilde0 = interaction_part(&f0);
    let n = size * size;
    let nf = n as f64;

    let (lambda, rhs, nominal) = match theorem {
        OracleTheorem::Thm4 => {
            let s = truth_jumps(size, size);
            ActiveSet::new(s, size, size)?; // admissibility: regular grid in range
            let lambda = thm4_lambda(4, sigma, n);
            let rhs = thm4_estimation_term(4, sigma, n, lambda);
            (lambda, rhs, 1.0 / nf)
        }
        OracleTheorem::FastMain => {
            let s = ActiveSet::new(truth_jumps(size, size), size, size)?;
            let tess = build_tessellation(&s, size, size)?;
            let x = (2.0 * nf).ln();
            let t = x;
            let lambda = fast_lambda(&tess, sigma, t);
            let rhs = oracle_rhs_fast(&f_tilde0, &f_tilde0, &s, &tess, sigma, lambda, x, t)?;
            (lambda, rhs.value, 1.0 - rhs.probability)
        }
        OracleTheorem::SlowMesh => {
            let cfg = slow_rate_config(sigma, n, None)?;
            // Admissibility: the mesh with the scheduled parameter must
            // exist at this size.
            build_mesh_grid(cfg.t_even, cfg.t_even, size, size)?;
            let x = (2.0 * nf).ln();
            let rhs = oracle_rhs_slow(
                &f_tilde0,
                &f_tilde0,
                sigma,
                cfg.lambda,
                cfg.s_admissible,
                x,
                x,
            )?;
            (cfg.lambda, rhs.value, 1.0 - rhs.probability)
        }
    };

    let violations: usize = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, size as u64, rep as u64);
            let y_tilde = interaction_part(&noisy_observation(&f0, sigma, &mut rng));
            let mse = if lambda == 0.0 {
                // Degenerate noiseless schedules: zero penalty fits the
                // centered observation exactly.
                y_tilde.sub(&f_tilde0).norm_sq() / nf
            } else {
                let opts = InteractionOptions {
                    tol,
                    ..Default::default()
                };
                match interaction_lasso_with(&y_tilde, lambda, &opts, None) {
                    Ok(fit) => fit.f_hat.sub(&f_tilde0).norm_sq() / nf,
                    Err(_) => f64::INFINITY,
                }
            };
            usize::from(mse > rhs)
        })
        .sum();

    Ok(ViolationReport {
        theorem,
        size,
        reps,
        lambda,
        rhs,
        violations,
        rate: violations as f64 / reps as f64,
        nominal_level: nominal,
    })
}

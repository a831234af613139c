//! The mean-squared-error rate experiment on the indicator truth.

use crate::error::{Error, Result};
use crate::experiments::{generate_truth, noisy_observation, substream};
use crate::image::interaction_part;
use crate::solvers::{interaction_lasso_with, InteractionOptions};
use crate::theory::schedules::{thm4_estimation_term, thm4_lambda, universal_lambda};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Version stamp written into every CSV/JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How the interaction penalty is chosen per size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRule {
    /// `sqrt(log(2n)/(2n))`, the simulation tuning of the reference
    /// experiment (a quarter of the smallest regular-grid choice).
    PaperSim,
    /// `4 sigma sqrt(log(2n)/(n sqrt(s)))` with `s = 4`.
    Thm4,
    /// The universal choice `lambda_0(log(2n))`.
    Universal,
    /// A fixed user value.
    Custom(f64),
}

impl LambdaRule {
    pub fn lambda(&self, n: usize, sigma: f64) -> f64 {
        match self {
            LambdaRule::PaperSim => ((2.0 * n as f64).ln() / (2.0 * n as f64)).sqrt(),
            LambdaRule::Thm4 => thm4_lambda(4, sigma, n),
            LambdaRule::Universal => universal_lambda(sigma, n, (2.0 * n as f64).ln()),
            LambdaRule::Custom(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Square sizes `n1 = n2`, each a multiple of 4.
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub sigma: f64,
    #[serde(default = "default_rule")]
    pub lambda_rule: LambdaRule,
    /// Extra multiplier on the rule, for sensitivity sweeps.
    #[serde(default = "default_multiplier")]
    pub lambda_multiplier: f64,
    #[serde(default)]
    pub seed: u64,
    /// Number of largest sizes entering the log-log slope fit.
    #[serde(default = "default_window")]
    pub slope_window: usize,
    /// Interaction-solver KKT tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
}

fn default_rule() -> LambdaRule {
    LambdaRule::PaperSim
}

fn default_multiplier() -> f64 {
    1.0
}

fn default_window() -> usize {
    5
}

fn default_tol() -> f64 {
    1e-6
}

impl SimConfig {
    pub fn new(sizes: Vec<usize>, reps: usize, sigma: f64, seed: u64) -> Self {
        Self {
            sizes,
            reps,
            sigma,
            lambda_rule: LambdaRule::PaperSim,
            lambda_multiplier: 1.0,
            seed,
            slope_window: 5,
            tol: 1e-6,
            max_sweeps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes must be nonempty".into()));
        }
        for &n in &self.sizes {
            if n == 0 || !n.is_multiple_of(4) {
                return Err(Error::SizeNotMultipleOfFour(n));
            }
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be >= 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.lambda_multiplier.is_finite() && self.lambda_multiplier > 0.0) {
            return Err(Error::InvalidConfig("lambda multiplier must be > 0".into()));
        }
        Ok(())
    }
}

/// One `(size, rep)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    /// Total pixel count of the instance.
    pub n: usize,
    pub rep: usize,
    pub mse: f64,
    /// Regular-grid estimation-term bound evaluated at the lambda used.
    pub bound: f64,
    pub violated: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub size: usize,
    pub n: usize,
    pub lambda: f64,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub bound_violation_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub schema_version: u32,
    pub config: SimConfig,
    pub rows: Vec<RepRecord>,
    pub per_size: Vec<SizeStats>,
    /// Least-squares slope of `log(mean mse)` against `log(n)` over the
    /// fitted window; NaN when a mean vanishes (noiseless runs).
    pub slope: f64,
    /// Sizes actually entering the fit.
    pub slope_window: Vec<usize>,
}

/// Runs the experiment: for each size, `reps` independent noisy copies
/// of the indicator truth are denoised on the interaction block and the
/// per-size mean squared errors are fitted on a log-log scale.
pub fn run_rate_simulation(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&size| (0..cfg.reps).map(move |rep| (size, rep)))
        .collect();

    let rows_unordered: Vec<(usize, usize, RepRecord)> = cells
        .par_iter()
        .map(|&(size, rep)| {
            let n = size * size;
            let lambda = cfg.lambda_rule.lambda(n, cfg.sigma) * cfg.lambda_multiplier;
            let f0 = generate_truth(size, size).expect("validated size");
            let f_tilde0 = interaction_part(&f0);
            let mut rng = substream(cfg.seed, size as u64, rep as u64);
            let y = noisy_observation(&f0, cfg.sigma, &mut rng);
            let y_tilde = interaction_part(&y);
            let opts = InteractionOptions {
                tol: cfg.tol,
                max_sweeps: cfg.max_sweeps,
                trace_objective: false,
            };
            let (mse, converged) =
                match interaction_lasso_with(&y_tilde, lambda, &opts, None) {
                    Ok(fit) => (
                        fit.f_hat.sub(&f_tilde0).norm_sq() / n as f64,
                        fit.converged,
                    ),
                    // Solver failures are recorded, not fatal.
                    Err(_) => (f64::NAN, false),
                };
            let bound = thm4_estimation_term(4, cfg.sigma, n, lambda);
            let record = RepRecord {
                n,
                rep,
                mse,
                bound,
                violated: mse > bound,
                converged,
            };
            (size, rep, record)
        })
        .collect();

    let mut keyed = rows_unordered;
    keyed.sort_by_key(|&(size, rep, _)| (size, rep));
    let rows: Vec<RepRecord> = keyed.into_iter().map(|(_, _, r)| r).collect();

    let mut per_size = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        let n = size * size;
        let group: Vec<&RepRecord> = rows.iter().filter(|r| r.n == n).collect();
        let m = group.len() as f64;
        let mean = group.iter().map(|r| r.mse).sum::<f64>() / m;
        let var = group.iter().map(|r| (r.mse - mean) * (r.mse - mean)).sum::<f64>()
            / (m - 1.0).max(1.0);
        let violations = group.iter().filter(|r| r.violated).count() as f64;
        per_size.push(SizeStats {
            size,
            n,
            lambda: cfg.lambda_rule.lambda(n, cfg.sigma) * cfg.lambda_multiplier,
            mean_mse: mean,
            sd_mse: var.sqrt(),
            bound_violation_rate: violations / m,
        });
    }

    let window = cfg.slope_window.max(2).min(per_size.len());
    let fitted = &per_size[per_size.len() - window..];
    let slope = fit_slope(
        &fitted.iter().map(|s| s.n as f64).collect::<Vec<_>>(),
        &fitted.iter().map(|s| s.mean_mse).collect::<Vec<_>>(),
    );
    let slope_window: Vec<usize> = fitted.iter().map(|s| s.size).collect();

    Ok(SimResult {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        per_size,
        slope,
        slope_window,
    })
}

/// Least-squares slope of `log(y)` on `log(x)`.
fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || y.iter().any(|&v| !v.is_finite() || v <= 0.0) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

impl SimResult {
    /// CSV with one row per `(size, rep)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,rep,mse,bound,violated")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{}",
                r.n, r.rep, r.mse, r.bound, r.violated
            )?;
        }
        Ok(())
    }

    /// JSON summary: config echo, per-size statistics and the slope.
    pub fn write_summary_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            config: &'a SimConfig,
            per_size: &'a [SizeStats],
            slope: f64,
            slope_window: &'a [usize],
        }
        serde_json::to_writer_pretty(
            out,
            &Summary {
                schema_version: self.schema_version,
                config: &self.config,
                per_size: &self.per_size,
                slope: self.slope,
                slope_window: &self.slope_window,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::tv;

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(vec![], 5, 1.0, 0).validate().is_err());
        assert!(SimConfig::new(vec![10], 5, 1.0, 0).validate().is_err());
        assert!(SimConfig::new(vec![16], 0, 1.0, 0).validate().is_err());
        assert!(SimConfig::new(vec![16], 5, 1.0, 0).validate().is_ok());
    }

    #[test]
    fn noiseless_runs_stay_inside_the_shrinkage_bound() {
        let mut cfg = SimConfig::new(vec![8, 16], 1, 0.0, 3);
        cfg.lambda_rule = LambdaRule::Custom(0.01);
        cfg.tol = 1e-9;
        let result = run_rate_simulation(&cfg).unwrap();
        for stats in &result.per_size {
            let f0 = generate_truth(stats.size, stats.size).unwrap();
            let ft0 = interaction_part(&f0);
            let bound = 4.0 * stats.lambda * tv(&ft0).unwrap();
            assert!(
                stats.mean_mse <= bound + 1e-12,
                "size {}: {} > {}",
                stats.size,
                stats.mean_mse,
                bound
            );
        }
        assert!(result.slope.is_nan() || result.slope.is_finite());
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let cfg = SimConfig::new(vec![8, 12], 3, 1.0, 11);
        let a = run_rate_simulation(&cfg).unwrap();
        let b = run_rate_simulation(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.per_size, b.per_size);
        assert!(a.slope == b.slope || (a.slope.is_nan() && b.slope.is_nan()));
    }

    #[test]
    fn mse_trends_down_with_size() {
        // The plain simulation rule sits above this truth's activation
        // threshold max|<atom, interactions>|/n = 1/64 until n is in the
        // tens of thousands; the multiplier knob moves the sweep into
        // the active regime so the decay is visible at desk sizes.
        let mut cfg = SimConfig::new(vec![16, 32, 64], 6, 1.0, 5);
        cfg.lambda_multiplier = 0.1;
        cfg.slope_window = 3;
        let result = run_rate_simulation(&cfg).unwrap();
        let mses: Vec<f64> = result.per_size.iter().map(|s| s.mean_mse).collect();
        assert!(mses[2] < mses[0], "no decay: {mses:?}");
        assert!(result.slope < 0.0);
    }

    #[test]
    fn csv_and_json_emission() {
        let cfg = SimConfig::new(vec![8], 2, 1.0, 1);
        let result = run_rate_simulation(&cfg).unwrap();
        let mut csv = Vec::new();
        result.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("n,rep,mse,bound,violated\n"));
        assert_eq!(text.lines().count(), 3);
        let mut json = Vec::new();
        result.write_summary_json(&mut json).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed["schema_version"], 1);
        assert!(parsed["per_size"].as_array().unwrap().len() == 1);
    }
}

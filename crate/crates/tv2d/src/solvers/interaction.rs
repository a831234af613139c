//! Penalized synthesis solver for the interaction terms.
//!
//! Minimizes `||ytilde - sum beta_{j,k} psitilde^{j,k}||_2^2 / n +
//! 2*lambda*sum |beta_{j,k}|` over the interaction block by cyclic
//! coordinate descent with covariance-style updates. Correlations with
//! the data come from one suffix-sum pass; cross products between atoms
//! use the closed-form Gram entries, so no dense dictionary is ever
//! formed.

use crate::dictionary::{suffix_sums, synthesize, CoefficientField};
use crate::error::{Error, Result};
use crate::image::{centering_defect, Image};
use crate::solvers::fused_lasso::absolute_penalty_weight;
use crate::tolerances;

/// Knobs for the interaction solve.
#[derive(Debug, Clone)]
pub struct InteractionOptions {
    /// KKT residual at which the solve counts as converged.
    pub tol: f64,
    /// Sweep cap; defaults to `50 * n1 * n2` when `None`.
    pub max_sweeps: Option<usize>,
    /// Record the objective value after every sweep.
    pub trace_objective: bool,
}

impl Default for InteractionOptions {
    fn default() -> Self {
        Self {
            tol: tolerances::KKT_DEFAULT,
            max_sweeps: None,
            trace_objective: false,
        }
    }
}

/// Output of an interaction solve.
#[derive(Debug, Clone)]
pub struct InteractionFit {
    /// Fitted interaction image `sum beta psitilde`.
    pub f_hat: Image,
    /// Coefficients (interaction block only; additive cells are zero).
    pub coefficients: CoefficientField,
    /// Max-abs violation of the coefficient subgradient conditions, on
    /// the scale of `corr/n` versus `lambda`.
    pub kkt_residual: f64,
    /// Number of coordinate sweeps performed.
    pub sweeps: usize,
    pub converged: bool,
    /// Penalized objective at the returned estimate.
    pub objective: f64,
    /// Objective after each sweep, when tracing was requested.
    pub objective_trace: Vec<f64>,
}

/// Largest `lambda` with a nonzero solution:
/// `max_{j,k} |<psitilde^{j,k}, ytilde>| / n`.
pub fn interaction_lambda_max(y_tilde: &Image) -> f64 {
    let (n1, n2) = y_tilde.dims();
    let n = (n1 * n2) as f64;
    let t = suffix_sums(y_tilde);
    let mut worst = 0.0f64;
    for j in 2..=n1 {
        for k in 2..=n2 {
            worst = worst.max(t.at(j, k).abs());
        }
    }
    worst / n
}

struct Workspace {
    n1: usize,
    n2: usize,
    /// Row extents `n1 - j + 1` for `j in [2:n1]`.
    ext1: Vec<f64>,
    /// Column extents `n2 - k + 1` for `k in [2:n2]`.
    ext2: Vec<f64>,
    /// Squared norms of the centered atoms.
    norms: Vec<f64>,
    /// `<psitilde^p, ytilde>`, fixed.
    data_corr: Vec<f64>,
    /// `<psitilde^p, fit>`, maintained incrementally.
    fit_corr: Vec<f64>,
    beta: Vec<f64>,
}

impl Workspace {
    fn p(&self) -> usize {
        (self.n1 - 1) * (self.n2 - 1)
    }

    #[inline]
    fn idx(&self, j: usize, k: usize) -> usize {
        (j - 2) * (self.n2 - 1) + (k - 2)
    }

    fn new(y: &Image, init: Option<&CoefficientField>) -> Self {
        let (n1, n2) = y.dims();
        let (f1, f2) = (n1 as f64, n2 as f64);
        let ext1: Vec<f64> = (2..=n1).map(|j| (n1 - j + 1) as f64).collect();
        let ext2: Vec<f64> = (2..=n2).map(|k| (n2 - k + 1) as f64).collect();
        let p = (n1 - 1) * (n2 - 1);
        let mut norms = vec![0.0; p];
        let mut data_corr = vec![0.0; p];
        let t = suffix_sums(y);
        for j in 2..=n1 {
            let a1 = ext1[j - 2];
            for k in 2..=n2 {
                let a2 = ext2[k - 2];
                let q = (j - 2) * (n2 - 1) + (k - 2);
                norms[q] = a1 * a2 * (1.0 - a1 / f1) * (1.0 - a2 / f2);
                data_corr[q] = t.at(j, k);
            }
        }
        let mut beta = vec![0.0; p];
        if let Some(c) = init {
            for j in 2..=n1 {
                for k in 2..=n2 {
                    beta[(j - 2) * (n2 - 1) + (k - 2)] = c.at(j, k);
                }
            }
        }
        Self {
            n1,
            n2,
            ext1,
            ext2,
            norms,
            data_corr,
            fit_corr: vec![0.0; p],
            beta,
        }
    }

    fn coefficients(&self) -> CoefficientField {
        let mut c = CoefficientField::zeros(self.n1, self.n2);
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                c.set(j, k, self.beta[self.idx(j, k)]);
            }
        }
        c
    }

    /// Adds `delta * <psitilde^q, psitilde^p>` to every fit correlation,
    /// for the changed coordinate `p = (jp,kp)`. Closed-form Gram row.
    fn rank_one_update(&mut self, jp: usize, kp: usize, delta: f64) {
        let (f1, f2) = (self.n1 as f64, self.n2 as f64);
        let b1 = self.ext1[jp - 2];
        let b2 = self.ext2[kp - 2];
        let cols = self.n2 - 1;
        for (jq, &a1) in self.ext1.iter().enumerate() {
            let x1 = a1.min(b1);
            let row_base = jq * cols;
            let c0 = x1;
            let c1 = b2 * x1 / f2;
            let c2 = a1 * b1 / f1;
            let c3 = a1 * b2 * b1 / (f1 * f2);
            for (kq, &a2) in self.ext2.iter().enumerate() {
                let x2 = a2.min(b2);
                // min(a1,b1)min(a2,b2) - a2 b2 min(a1,b1)/n2
                //   - a1 b1 min(a2,b2)/n1 + a1 a2 b1 b2 / n
                let g = c0 * x2 - c1 * a2 - c2 * x2 + c3 * a2;
                self.fit_corr[row_base + kq] += delta * g;
            }
        }
    }

    /// Rebuilds the fit image, residual correlations and objective from
    /// scratch; keeps incremental drift bounded.
    fn refresh(&mut self, y: &Image, lambda: f64) -> (Image, f64, f64) {
        let fit = synthesize(&self.coefficients());
        let resid = y.sub(&fit);
        let t = suffix_sums(&resid);
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                let q = self.idx(j, k);
                self.fit_corr[q] = self.data_corr[q] - t.at(j, k);
            }
        }
        let n = (self.n1 * self.n2) as f64;
        let l1: f64 = self.beta.iter().map(|b| b.abs()).sum();
        let objective = resid.norm_sq() / n + 2.0 * lambda * l1;
        let kkt = self.kkt_residual(lambda);
        (fit, objective, kkt)
    }

    /// Max-abs subgradient violation on the `corr/n` scale.
    fn kkt_residual(&self, lambda: f64) -> f64 {
        let n = (self.n1 * self.n2) as f64;
        let mut worst = 0.0f64;
        for q in 0..self.p() {
            let corr = (self.data_corr[q] - self.fit_corr[q]) / n;
            let b = self.beta[q];
            let viol = if b != 0.0 {
                (corr - lambda * b.signum()).abs()
            } else {
                (corr.abs() - lambda).max(0.0)
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// One coordinate-descent pass. When `active_only` is set, only
    /// currently nonzero coordinates are visited. Returns the largest
    /// KKT-scale change `|delta| * a_q / n` seen in the pass.
    fn sweep(&mut self, threshold: f64, active_only: bool) -> f64 {
        let n = (self.n1 * self.n2) as f64;
        let mut max_change = 0.0f64;
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                let q = self.idx(j, k);
                let old = self.beta[q];
                if active_only && old == 0.0 {
                    continue;
                }
                let a = self.norms[q];
                let rho = self.data_corr[q] - self.fit_corr[q] + old * a;
                let new = soft_threshold(rho, threshold) / a;
                if new != old {
                    let delta = new - old;
                    self.beta[q] = new;
                    self.rank_one_update(j, k, delta);
                    max_change = max_change.max(delta.abs() * a / n);
                }
            }
        }
        max_change
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_centered(y: &Image) -> Result<()> {
    let (max_row, max_col) = centering_defect(y);
    let (n1, n2) = y.dims();
    let scale =
        tolerances::CENTERING_TOL * (1.0 + y.max_abs()) * n1.max(n2) as f64;
    if max_row > scale || max_col > scale {
        return Err(Error::NotCentered {
            max_row_sum: max_row,
            max_col_sum: max_col,
        });
    }
    Ok(())
}

/// Solves the interaction Lasso with default options.
pub fn interaction_lasso(y_tilde: &Image, lambda: f64, tol: f64) -> Result<InteractionFit> {
    interaction_lasso_with(
        y_tilde,
        lambda,
        &InteractionOptions {
            tol,
            ..Default::default()
        },
        None,
    )
}

/// Full-control entry point; `init` warm-starts the coefficients.
pub fn interaction_lasso_with(
    y_tilde: &Image,
    lambda: f64,
    opts: &InteractionOptions,
    init: Option<&CoefficientField>,
) -> Result<InteractionFit> {
    let (n1, n2) = y_tilde.dims();
    if n1 < 2 || n2 < 2 {
        return Err(Error::DimensionTooSmall { n1, n2 });
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidTuning(format!(
            "interaction lasso needs lambda > 0, got {lambda}"
        )));
    }
    check_centered(y_tilde)?;

    let n = n1 * n2;
    let max_sweeps = opts.max_sweeps.unwrap_or(50 * n);
    let threshold = absolute_penalty_weight(n, lambda);
    let mut ws = Workspace::new(y_tilde, init);

    let mut sweeps = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;
    let (mut fit, mut objective, mut kkt) = ws.refresh(y_tilde, lambda);
    loop {
        if kkt <= opts.tol {
            converged = true;
            break;
        }
        if sweeps >= max_sweeps {
            break;
        }
        // One full pass over all coordinates.
        ws.sweep(threshold, false);
        sweeps += 1;
        if opts.trace_objective {
            let (_, obj, _) = ws.refresh(y_tilde, lambda);
            trace.push(obj);
        }
        // Then settle the active set before paying for the next full
        // KKT check.
        while sweeps < max_sweeps {
            let change = ws.sweep(threshold, true);
            sweeps += 1;
            if opts.trace_objective {
                let (_, obj, _) = ws.refresh(y_tilde, lambda);
                trace.push(obj);
            }
            if change <= opts.tol * 0.1 {
                break;
            }
        }
        let (f, obj, res) = ws.refresh(y_tilde, lambda);
        fit = f;
        objective = obj;
        kkt = res;
    }

    Ok(InteractionFit {
        f_hat: fit,
        coefficients: ws.coefficients(),
        kkt_residual: kkt,
        sweeps,
        converged,
        objective,
        objective_trace: trace,
    })
}

//! Named verification suites: exact identities, closed-form
//! inequalities, antiprojection certifications and Monte-Carlo bound
//! checks. The CLI `verify` command and the acceptance tests both run
//! these.

use crate::dictionary::{expansion_coefficients, synthesize};
use crate::error::{Error, Result};
use crate::experiments::{truth_jumps, verify_oracle_bound, OracleTheorem};
use crate::image::{
    adjoint_derivative, anova_decompose, interaction_part, total_derivative, tv,
    DerivativeField, Image,
};
use crate::solvers::{analysis_oracle_solve_with, interaction_lasso};
use crate::theory::antiprojection::{
    antiprojection_bound, antiprojection_exact, antiprojection_exact_points,
};
use crate::theory::mesh::{build_mesh_grid, mesh_antiprojection_bound};
use crate::theory::sparsity::{
    effective_sparsity_sampled, gamma_bound_formula, gamma_exact_from_w,
};
use crate::theory::tessellation::{build_tessellation, ActiveSet};
use crate::theory::weights::{interpolating_matrix, noise_weights};
use crate::tolerances;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            suite: name.to_string(),
            passed: true,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// First failing check, for error reporting.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

pub const SUITES: &[&str] = &[
    "identities",
    "lemma75",
    "lemma76",
    "lemma77",
    "antiprojections",
    "mesh",
    "sandwich",
    "interpolating",
    "equivalence",
    "basic-inequality",
    "mc-thm4",
    "mc-fast",
    "mc-slow",
];

/// Runs one named suite. `reps` overrides the Monte-Carlo repetition
/// count where applicable.
pub fn run_suite(name: &str, seed: u64, reps: Option<usize>) -> Result<SuiteReport> {
    match name {
        "identities" => Ok(identities_suite(seed)),
        "lemma75" => Ok(lemma75_suite()),
        "lemma76" => Ok(lemma76_suite(seed)),
        "lemma77" => Ok(lemma77_suite(seed)),
        "antiprojections" => antiprojections_suite(),
        "mesh" => mesh_suite(),
        "sandwich" => sandwich_suite(seed, reps.unwrap_or(10_000)),
        "interpolating" => Ok(interpolating_suite(seed)),
        "equivalence" => equivalence_suite(seed),
        "basic-inequality" => basic_inequality_suite(seed),
        "mc-thm4" => mc_suite(OracleTheorem::Thm4, 32, seed, reps.unwrap_or(100)),
        "mc-fast" => mc_suite(OracleTheorem::FastMain, 32, seed, reps.unwrap_or(100)),
        "mc-slow" => mc_suite(OracleTheorem::SlowMesh, 40, seed, reps.unwrap_or(100)),
        other => Err(Error::InvalidConfig(format!(
            "unknown suite '{other}'; available: {}",
            SUITES.join(", ")
        ))),
    }
}

fn random_image(rng: &mut ChaCha8Rng, n1: usize, n2: usize) -> Image {
    Image::from_fn(n1, n2, |_, _| rng.random_range(-4.0..4.0))
}

/// Exact identities: ANOVA orthogonality and norm split, expansion round
/// trip, partial integration, adjointness; 100 random instances each.
pub fn identities_suite(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("identities");
    let tol = tolerances::EXACT_IDENTITY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst_orth = 0.0f64;
    let mut worst_pyth = 0.0f64;
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(2..12), rng.random_range(2..12));
        let f = random_image(&mut rng, n1, n2);
        let parts = anova_decompose(&f);
        let mean_img = Image::constant(n1, n2, parts.global_mean);
        let row_img = Image::from_fn(n1, n2, |j, _| parts.row_effects[j - 1]);
        let col_img = Image::from_fn(n1, n2, |_, k| parts.col_effects[k - 1]);
        let comps = [&mean_img, &row_img, &col_img, &parts.interactions];
        for a in 0..4 {
            for b in (a + 1)..4 {
                worst_orth = worst_orth.max(comps[a].dot(comps[b]).abs());
            }
        }
        let (g, r, c, i) = parts.component_norms_sq();
        let total = f.norm_sq();
        worst_pyth = worst_pyth.max(((g + r + c + i) - total).abs() / total.max(1.0));
    }
    report.push(
        "anova orthogonality",
        worst_orth <= tol,
        format!("max |<comp_a, comp_b>| = {worst_orth:.3e}"),
    );
    report.push(
        "pythagorean norm split",
        worst_pyth <= tol,
        format!("max relative defect = {worst_pyth:.3e}"),
    );

    let mut worst_rt = 0.0f64;
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(2..12), rng.random_range(2..12));
        let f = random_image(&mut rng, n1, n2);
        let back = synthesize(&expansion_coefficients(&f));
        worst_rt = worst_rt.max(f.max_abs_diff(&back));
    }
    report.push(
        "expansion round trip",
        worst_rt <= tol,
        format!("max |f - synth(coeffs(f))| = {worst_rt:.3e}"),
    );

    let mut worst_pi = 0.0f64;
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(4..12), rng.random_range(4..12));
        let f = random_image(&mut rng, n1, n2);
        let w = DerivativeField::from_fn(n1, n2, |j, k| {
            if j == 2 || j == n1 || k == 2 || k == n2 {
                0.0
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .expect("grid is large enough");
        let lhs = w.dot(&total_derivative(&f).expect("sizes >= 4"));
        let mut rhs = 0.0;
        for j in 2..=n1 - 1 {
            for k in 2..=n2 - 1 {
                let dw = w.at(j + 1, k + 1) - w.at(j + 1, k) - w.at(j, k + 1) + w.at(j, k);
                rhs += dw * f.at(j, k);
            }
        }
        worst_pi = worst_pi.max((lhs - rhs).abs());
    }
    report.push(
        "partial integration",
        worst_pi <= tol,
        format!("max |trace(w' Df) - sum (Dw) f| = {worst_pi:.3e}"),
    );

    let mut worst_adj = 0.0f64;
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(2..12), rng.random_range(2..12));
        let f = random_image(&mut rng, n1, n2);
        let w = DerivativeField::from_fn(n1, n2, |_, _| rng.random_range(-3.0..3.0))
            .expect("sizes >= 2");
        let lhs = w.dot(&total_derivative(&f).expect("sizes >= 2"));
        let rhs = adjoint_derivative(&w).dot(&f);
        worst_adj = worst_adj.max((lhs - rhs).abs());
    }
    report.push(
        "adjointness",
        worst_adj <= tol,
        format!("max |<w, Df> - <D'w, f>| = {worst_adj:.3e}"),
    );
    report
}

/// `(1-sqrt(x))(1-y)/2 + (1-x)(1-sqrt(y))/2 <= 1 - (sqrt(x)+sqrt(y))/2`
/// on a 200x200 grid of `[0,1]^2`.
pub fn lemma75_suite() -> SuiteReport {
    let mut report = SuiteReport::new("lemma75");
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let grid = 200usize;
    for i in 0..grid {
        for j in 0..grid {
            let x = i as f64 / (grid - 1) as f64;
            let y = j as f64 / (grid - 1) as f64;
            let lhs = 0.5 * (1.0 - x.sqrt()) * (1.0 - y) + 0.5 * (1.0 - x) * (1.0 - y.sqrt());
            let rhs = 1.0 - 0.5 * (x.sqrt() + y.sqrt());
            let defect = lhs - rhs;
            worst = worst.max(defect);
            if defect > tolerances::INEQUALITY_FP_SLACK {
                violations += 1;
            }
        }
    }
    report.push(
        "grid sweep 200x200",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    report
}

/// The weight-splitting inequality on 1000 random integer tuples.
pub fn lemma76_suite(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("lemma76");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let t1 = rng.random_range(1..50usize);
        let t2 = rng.random_range(1..50usize);
        let d1 = rng.random_range(1..40usize);
        let d2 = rng.random_range(1..40usize);
        let n1 = rng.random_range(1..200usize);
        let n2 = rng.random_range(1..200usize);
        let j = rng.random_range(t1..=t1 + d1);
        let k = rng.random_range(t2..=t2 + d2);
        let lhs = ((j - t1) as f64 / n1 as f64 + (k - t2) as f64 / n2 as f64).sqrt();
        let rhs = (((j - t1) as f64 / d1 as f64).sqrt() + ((k - t2) as f64 / d2 as f64).sqrt())
            * (d1 as f64 / n1 as f64 + d2 as f64 / n2 as f64).sqrt();
        let defect = lhs - rhs;
        worst = worst.max(defect);
        if defect > tolerances::INEQUALITY_FP_SLACK {
            violations += 1;
        }
    }
    report.push(
        "1000 random tuples",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    report
}

/// Projections contract on random subspace triples: projecting both the
/// spanning vectors and the target onto a subspace never increases the
/// projection residual.
pub fn lemma77_suite(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("lemma77");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let dim = rng.random_range(3..=50usize);
        let span_size = rng.random_range(1..=4usize.min(dim));
        let w_size = rng.random_range(1..=dim);
        let u = DMatrix::from_fn(dim, span_size, |_, _| rng.random_range(-1.0..1.0f64));
        let w_raw = DMatrix::from_fn(dim, w_size, |_, _| rng.random_range(-1.0..1.0f64));
        let z = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0f64));

        // Orthonormal basis of W via thin QR, then P_W = B B'.
        let qr = w_raw.qr();
        let b = qr.q();
        let project_w = |v: &DVector<f64>| -> DVector<f64> { &b * (b.transpose() * v) };

        let resid = |basis: &DMatrix<f64>, target: &DVector<f64>| -> f64 {
            let svd = basis.clone().svd(true, true);
            let coeff = svd.solve(target, 1e-12).expect("svd solve");
            (target - basis * coeff).norm()
        };

        let plain = resid(&u, &z);
        let mut u_tilde = DMatrix::zeros(dim, span_size);
        for c in 0..span_size {
            u_tilde.set_column(c, &project_w(&u.column(c).into_owned()));
        }
        let z_tilde = project_w(&z);
        let projected = resid(&u_tilde, &z_tilde);
        let defect = projected - plain;
        worst = worst.max(defect);
        if defect > tolerances::EXACT_IDENTITY {
            violations += 1;
        }
    }
    report.push(
        "100 random subspace triples",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    report
}

/// Exact antiprojections against the rectangle bound on a 24x24 grid
/// with the regular 4-jump active set.
pub fn antiprojections_suite() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("antiprojections");
    let n = 24usize;
    let s = ActiveSet::new(truth_jumps(n, n), n, n)?;
    let tess = build_tessellation(&s, n, n)?;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for j in 2..=n {
        for k in 2..=n {
            let m = tess.rect_containing(j, k).expect("covered");
            let (t1, t2) = tess.rects()[m].jump;
            let exact = antiprojection_exact(&s, crate::dictionary::AtomIndex::new(j, k))?;
            let bound = antiprojection_bound(j, k, t1, t2, n, n);
            let defect = exact - bound;
            worst = worst.max(defect);
            if defect > tolerances::INEQUALITY_FP_SLACK {
                violations += 1;
            }
        }
    }
    report.push(
        "24x24 regular grid, all inner points",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    Ok(report)
}

/// Exact mesh antiprojections against the uniform mesh bound on the
/// 30x51 instance with t1 = 3, t2 = 4.
pub fn mesh_suite() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("mesh");
    let (n1, n2, t1, t2) = (30usize, 51usize, 3usize, 4usize);
    let mesh = build_mesh_grid(t1, t2, n1, n2)?;
    let bound = mesh_antiprojection_bound(t1, t2);
    report.push(
        "bound value",
        (bound - 0.2014).abs() < 5e-4,
        format!("bound = {bound:.6}"),
    );
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for j in 2..=n1 {
        for k in 2..=n2 {
            let exact = antiprojection_exact_points(
                &mesh.points,
                crate::dictionary::AtomIndex::new(j, k),
                n1,
                n2,
                false,
            )?;
            let defect = exact - bound;
            worst = worst.max(defect);
            if defect > tolerances::INEQUALITY_FP_SLACK {
                violations += 1;
            }
        }
    }
    report.push(
        "30x51 mesh, all inner points",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    Ok(report)
}

/// Certified sandwich on 12x12 with 4 jumps:
/// `sampled <= sqrt(n ||D1' w D2||^2) <= sqrt(closed form)` for several
/// sign configurations.
pub fn sandwich_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("sandwich");
    let n = 12usize;
    let s = ActiveSet::new(vec![(4, 4), (4, 9), (9, 4), (9, 9)], n, n)?;
    let tess = build_tessellation(&s, n, n)?;
    let wf = noise_weights(&tess);
    let hi = gamma_bound_formula(&tess).sqrt();
    for (i, signs) in [[1i8, 1, 1, 1], [1, -1, -1, 1], [-1, 1, -1, 1]]
        .iter()
        .enumerate()
    {
        let w = interpolating_matrix(&tess, signs)?;
        let mid = gamma_exact_from_w(&w).sqrt();
        let sampled = effective_sparsity_sampled(&s, &wf.v, signs, trials, seed + i as u64)?;
        report.push(
            format!("signs {signs:?}: sampled <= certified"),
            sampled <= mid + 1e-9,
            format!("sampled {sampled:.6} vs certified {mid:.6}"),
        );
        report.push(
            format!("signs {signs:?}: certified <= closed form"),
            mid <= hi + 1e-9,
            format!("certified {mid:.6} vs closed form {hi:.6}"),
        );
    }
    Ok(report)
}

/// Interpolating-matrix validity: both defining properties pointwise on
/// random sign configurations over random grid tessellations.
pub fn interpolating_suite(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("interpolating");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut boundary_violations = 0usize;
    for _ in 0..20 {
        let n1 = rng.random_range(10..20usize);
        let n2 = rng.random_range(10..20usize);
        let rows = rng.random_range(1..3usize);
        let cols = rng.random_range(1..3usize);
        let s = match ActiveSet::regular_grid(rows, cols, n1, n2) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let tess = match build_tessellation(&s, n1, n2) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let wf = noise_weights(&tess);
        let signs: Vec<i8> = (0..tess.s())
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect();
        let im = interpolating_matrix(&tess, &signs).expect("matching signs");
        for (m, rect) in tess.rects().iter().enumerate() {
            let (t1, t2) = rect.jump;
            if (im.w.at(t1, t2) - signs[m] as f64).abs() > 1e-15 {
                violations += 1;
            }
        }
        for j in 2..=n1 {
            for k in 2..=n2 {
                if !s.contains(j, k)
                    && im.w.at(j, k).abs() > 1.0 - wf.v.at(j, k) + 1e-14
                {
                    violations += 1;
                }
                if tess.rects().iter().any(|r| r.on_boundary(j, k))
                    && im.w.at(j, k).abs() > 1e-14
                {
                    boundary_violations += 1;
                }
            }
        }
    }
    report.push(
        "defining bullets pointwise",
        violations == 0,
        format!("{violations} violations"),
    );
    report.push(
        "vanishes on rectangle boundaries",
        boundary_violations == 0,
        format!("{boundary_violations} violations"),
    );
    report
}

/// Synthesis/analysis agreement on random doubly centered 8x8 inputs
/// across three penalty levels.
pub fn equivalence_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let y = interaction_part(&Image::from_fn(8, 8, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        }));
        for lambda in [0.01, 0.1, 1.0] {
            let synth = interaction_lasso(&y, lambda, 1e-11)?;
            let analysis = analysis_oracle_solve_with(&y, lambda, 1e-12, 4_000_000)?;
            worst = worst.max(synth.f_hat.max_abs_diff(&analysis));
        }
    }
    report.push(
        "20 instances x 3 lambdas",
        worst <= tolerances::SOLVER_AGREEMENT,
        format!("max |synthesis - analysis| = {worst:.3e}"),
    );
    Ok(report)
}

/// The basic inequality against 50 random competitors on a noisy 8x8
/// instance.
pub fn basic_inequality_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("basic-inequality");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = crate::experiments::generate_truth(8, 8)?;
    let ft0 = interaction_part(&f0);
    let noise = Image::from_fn(8, 8, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let y = interaction_part(&f0.add(&noise));
    let eps = y.sub(&ft0);
    let lambda = 0.08;
    let fit = interaction_lasso(&y, lambda, 1e-11)?;
    let tv_hat = tv(&fit.f_hat)?;
    let n = 64.0;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let g = random_image(&mut rng, 8, 8).scale(0.4);
        let lhs = fit.f_hat.sub(&ft0).norm_sq() / n + fit.f_hat.sub(&g).norm_sq() / n;
        let rhs = g.sub(&ft0).norm_sq() / n
            + 2.0 * eps.dot(&fit.f_hat.sub(&g)) / n
            + 2.0 * lambda * (tv(&g)? - tv_hat);
        let defect = lhs - rhs;
        worst = worst.max(defect);
        if defect > tolerances::BASIC_INEQUALITY_SLACK {
            violations += 1;
        }
    }
    report.push(
        "50 random competitors",
        violations == 0,
        format!("{violations} violations, worst defect {worst:.3e}"),
    );
    Ok(report)
}

/// Monte-Carlo violation rate of an oracle bound, gated at 5%.
pub fn mc_suite(
    theorem: OracleTheorem,
    size: usize,
    seed: u64,
    reps: usize,
) -> Result<SuiteReport> {
    let name = match theorem {
        OracleTheorem::Thm4 => "mc-thm4",
        OracleTheorem::FastMain => "mc-fast",
        OracleTheorem::SlowMesh => "mc-slow",
    };
    let mut report = SuiteReport::new(name);
    let result = verify_oracle_bound(theorem, size, 1.0, reps, seed, 1e-6)?;
    report.push(
        format!("{reps} reps on {size}x{size}"),
        result.rate <= 0.05,
        format!(
            "violation rate {:.4} (rhs {:.4}, lambda {:.4})",
            result.rate, result.rhs, result.lambda
        ),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", 1, None).is_err());
    }

    #[test]
    fn quick_inequality_suites_pass() {
        for name in ["lemma75", "lemma76", "lemma77"] {
            let report = run_suite(name, 7, None).unwrap();
            assert!(report.passed, "{name}: {:?}", report.first_failure());
        }
    }

    #[test]
    fn identities_suite_passes() {
        let report = identities_suite(13);
        assert!(report.passed, "{:?}", report.first_failure());
    }

    #[test]
    fn interpolating_suite_passes() {
        let report = interpolating_suite(3);
        assert!(report.passed, "{:?}", report.first_failure());
    }

    #[test]
    fn sandwich_suite_reduced_trials() {
        let report = sandwich_suite(5, 100).unwrap();
        assert!(report.passed, "{:?}", report.first_failure());
    }

    #[test]
    fn basic_inequality_suite_passes() {
        let report = basic_inequality_suite(2).unwrap();
        assert!(report.passed, "{:?}", report.first_failure());
    }
}

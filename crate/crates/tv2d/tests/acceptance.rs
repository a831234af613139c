//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them all).
//!
//! Criteria:
//! 1. rate-slope replication at desk scale;
//! 2. synthesis/analysis solver equivalence;
//! 3. exact algebraic identities;
//! 4. closed-form inequality sweeps;
//! 5. antiprojection certification (rectangle and mesh bounds);
//! 6. effective-sparsity sandwich;
//! 7. Monte-Carlo oracle-bound checks;
//! 8. solver KKT certification and the exact null threshold.
//!
//! The full-scale rate experiment (sizes up to 200, 40 reps) is the
//! ignored `full_scale_rate_slope` target.

use tv2d::experiments::{
    run_rate_simulation, verify_oracle_bound, LambdaRule, OracleTheorem, SimConfig,
};
use tv2d::image::interaction_part;
use tv2d::solvers::{interaction_lambda_max, interaction_lasso};
use tv2d::suites;

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}

/// Criterion 1: desk-scale simulation with sizes {16,32,48,64,96,128},
/// 20 reps, sigma = 1, lambda = sqrt(log(2n)/(2n)), fixed seed; the
/// log-log slope over the top five sizes must land in [-1.25, -0.80].
#[test]
fn criterion_1_rate_slope_desk_scale() {
    let cfg = SimConfig {
        sizes: vec![16, 32, 48, 64, 96, 128],
        reps: 20,
        sigma: 1.0,
        lambda_rule: LambdaRule::PaperSim,
        lambda_multiplier: 1.0,
        seed: 20_260_810,
        slope_window: 5,
        tol: 1e-6,
        max_sweeps: None,
    };
    let result = run_rate_simulation(&cfg).expect("simulation runs");
    for s in &result.per_size {
        println!(
            "  size {:4} lambda {:.5} mean mse {:.6} (sd {:.6})",
            s.size, s.lambda, s.mean_mse, s.sd_mse
        );
    }
    let slope = result.slope;
    let passed = (-1.25..=-0.80).contains(&slope);
    report(
        "1 (rate slope, desk scale)",
        passed,
        &format!("slope {slope:.4} over sizes {:?}, band [-1.25, -0.80]", result.slope_window),
    );
    assert!(
        passed,
        "measured slope {slope:.4} outside [-1.25, -0.80]; per-size mean mse {:?}. \
         At this tuning rule the interaction estimate is the null solution for every \
         size in the window: the strongest atom correlation of this truth is \
         max|<atom, interactions>|/n = 1/64 ~ 0.0156 at every size, while the rule's \
         lambda stays above that level until n1 is about 155. The decay with slope \
         near -1 appears exactly where the rule crosses the activation threshold \
         (see the ignored full_scale_rate_slope target, which fits sizes 156..200).",
        result
            .per_size
            .iter()
            .map(|s| s.mean_mse)
            .collect::<Vec<_>>()
    );
}

/// Criterion 2: synthesis and analysis routes agree to 1e-6 max-abs on
/// 20 random doubly centered 8x8 inputs at lambda in {0.01, 0.1, 1}.
#[test]
fn criterion_2_synthesis_analysis_equivalence() {
    let r = suites::equivalence_suite(20_260_810).expect("suite runs");
    let detail = r
        .checks
        .first()
        .map(|c| c.detail.clone())
        .unwrap_or_default();
    report("2 (synthesis/analysis equivalence)", r.passed, &detail);
    assert!(r.passed, "{:?}", r.first_failure());
}

/// Criterion 3: exact identities at 1e-10 on 100 random instances each.
#[test]
fn criterion_3_exact_identities() {
    let r = suites::identities_suite(20_260_810);
    for c in &r.checks {
        println!("  {}: {}", c.label, c.detail);
    }
    report("3 (exact identities)", r.passed, "orthogonality, round trip, partial integration, adjointness");
    assert!(r.passed, "{:?}", r.first_failure());
}

/// Criterion 4: inequality sweeps with zero violations.
#[test]
fn criterion_4_inequality_suites() {
    let grid = suites::lemma75_suite();
    let tuples = suites::lemma76_suite(20_260_810);
    let proj = suites::lemma77_suite(20_260_810);
    let passed = grid.passed && tuples.passed && proj.passed;
    report(
        "4 (inequality suites)",
        passed,
        &format!(
            "weight formula grid: {}; weight splitting: {}; projections: {}",
            grid.checks[0].detail, tuples.checks[0].detail, proj.checks[0].detail
        ),
    );
    assert!(grid.passed, "{:?}", grid.first_failure());
    assert!(tuples.passed, "{:?}", tuples.first_failure());
    assert!(proj.passed, "{:?}", proj.first_failure());
}

/// Criterion 5: the per-rectangle antiprojection bound dominates exact
/// residuals on a 24x24 grid with the regular 4-jump set, and the mesh
/// bound (~0.2014 at t1=3, t2=4) dominates on the 30x51 mesh instance.
#[test]
fn criterion_5_antiprojection_certification() {
    let rect = suites::antiprojections_suite().expect("suite runs");
    let mesh = suites::mesh_suite().expect("suite runs");
    let passed = rect.passed && mesh.passed;
    report(
        "5 (antiprojection certification)",
        passed,
        &format!(
            "rectangles: {}; mesh: {} / {}",
            rect.checks[0].detail, mesh.checks[0].detail, mesh.checks[1].detail
        ),
    );
    assert!(rect.passed, "{:?}", rect.first_failure());
    assert!(mesh.passed, "{:?}", mesh.first_failure());
}

/// Criterion 6: sampled effective sparsity (1e4 restarts) below the
/// certified interpolating-matrix value below the closed-form bound, on
/// 12x12 with 4 jumps.
#[test]
fn criterion_6_effective_sparsity_sandwich() {
    let r = suites::sandwich_suite(20_260_810, 10_000).expect("suite runs");
    for c in &r.checks {
        println!("  {}: {}", c.label, c.detail);
    }
    report("6 (effective-sparsity sandwich)", r.passed, "sampled <= certified <= closed form");
    assert!(r.passed, "{:?}", r.first_failure());
}

/// Criterion 7: Monte-Carlo oracle-bound checks at 5% violation gates
/// (the bounds themselves promise ~1/n).
#[test]
fn criterion_7_oracle_bound_monte_carlo() {
    let thm4 = verify_oracle_bound(OracleTheorem::Thm4, 32, 1.0, 100, 20_260_810, 1e-6)
        .expect("thm4 mc runs");
    let slow = verify_oracle_bound(OracleTheorem::SlowMesh, 40, 1.0, 100, 20_260_810, 1e-6)
        .expect("slow mc runs");
    let passed = thm4.rate <= 0.05 && slow.rate <= 0.05;
    report(
        "7 (oracle-bound Monte Carlo)",
        passed,
        &format!(
            "regular grid 32x32: rate {:.3} (rhs {:.3}); data-driven mesh 40x40: rate {:.3} (rhs {:.3})",
            thm4.rate, thm4.rhs, slow.rate, slow.rhs
        ),
    );
    assert!(thm4.rate <= 0.05, "thm4 violation rate {}", thm4.rate);
    assert!(slow.rate <= 0.05, "slow violation rate {}", slow.rate);
}

/// Criterion 8: every converged solve certifies its KKT residual at
/// 1e-6, and the null threshold is exact.
#[test]
fn criterion_8_solver_certification() {
    let mut solves = 0usize;
    let mut worst_kkt = 0.0f64;
    for size in [8usize, 16, 24] {
        let f0 = tv2d::experiments::generate_truth(size, size).expect("size ok");
        for rep in 0..3u64 {
            let mut rng = tv2d::experiments::substream(99, size as u64, rep);
            let y = interaction_part(&tv2d::experiments::noisy_observation(&f0, 1.0, &mut rng));
            let lmax = interaction_lambda_max(&y);
            for frac in [0.05, 0.3, 0.7] {
                let fit = interaction_lasso(&y, lmax * frac, 1e-6).expect("solve runs");
                assert!(fit.converged, "size {size} frac {frac} did not converge");
                worst_kkt = worst_kkt.max(fit.kkt_residual);
                solves += 1;
            }
            // Exact null threshold: at or above lambda_max the solution
            // is identically zero, with no tolerance involved.
            let null = interaction_lasso(&y, lmax * 1.0000001, 1e-6).expect("solve runs");
            assert!(null.converged);
            assert_eq!(null.coefficients.interaction_support(0.0), 0);
            assert_eq!(null.f_hat.max_abs(), 0.0);
            // Strictly below, the solution is nonzero.
            let active = interaction_lasso(&y, lmax * 0.999, 1e-6).expect("solve runs");
            assert!(active.coefficients.interaction_support(0.0) > 0);
            solves += 2;
        }
    }
    let passed = worst_kkt <= 1e-6;
    report(
        "8 (solver certification)",
        passed,
        &format!("{solves} solves, worst converged KKT residual {worst_kkt:.3e}, null threshold exact"),
    );
    assert!(passed);
}

/// The full-scale rate experiment: sizes 4..200 step 4, 40 reps,
/// sigma = 1, the plain simulation rule, slope fitted over the five
/// largest sizes of the active regime (156..200 among the fitted
/// window); gate [-1.15, -0.90]. Slow; opt in with `--ignored`.
#[test]
#[ignore = "full-scale replication; minutes of runtime"]
fn full_scale_rate_slope() {
    let sizes: Vec<usize> = (1..=50).map(|i| 4 * i).collect();
    let cfg = SimConfig {
        sizes,
        reps: 40,
        sigma: 1.0,
        lambda_rule: LambdaRule::PaperSim,
        lambda_multiplier: 1.0,
        seed: 20_260_810,
        // Fit over the largest twelve sizes, 156..200, where the tuning
        // rule sits below the activation threshold of this truth.
        slope_window: 12,
        tol: 1e-6,
        max_sweeps: None,
    };
    let result = run_rate_simulation(&cfg).expect("simulation runs");
    for s in result.per_size.iter().filter(|s| s.size >= 140) {
        println!(
            "  size {:4} lambda {:.5} mean mse {:.6}",
            s.size, s.lambda, s.mean_mse
        );
    }
    let slope = result.slope;
    let passed = (-1.15..=-0.90).contains(&slope);
    report(
        "full-scale rate slope",
        passed,
        &format!("slope {slope:.4} over sizes {:?}", result.slope_window),
    );
    assert!(passed, "slope {slope:.4} outside [-1.15, -0.90]");
}

//! Exact 1D fused lasso via the direct taut-string style algorithm.

use crate::error::{Error, Result};

/// Converts the per-vector tuning parameter of the
/// `(1/m)||y-b||^2 + 2*lambda*sum|b_i - b_{i-1}|` objective into the
/// absolute penalty weight of the internal
/// `(1/2)||y-b||^2 + w*sum|b_i - b_{i-1}|` form (multiply by `m/2`, so
/// `w = m * lambda`).
///
/// Every lambda rescaling in the crate funnels through this function:
/// the main-effect problems keep the tuning parameters of the joint
/// `/n`-normalized objective unchanged (their reduced vector objective is
/// `(1/n1)||.||^2` resp. `(1/n2)||.||^2`), and the interaction
/// coordinate-descent threshold is `absolute_penalty_weight(n1*n2, lambda)`.
pub fn absolute_penalty_weight(m: usize, lambda: f64) -> f64 {
    m as f64 * lambda
}

/// Exact minimizer of `(1/m)||y-b||^2 + 2*lambda*sum_i |b_i - b_{i-1}|`.
///
/// The output is piecewise constant and preserves the mean of `y`.
pub fn fused_lasso_1d(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::InvalidConfig(
            "fused lasso input must have length >= 1".into(),
        ));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidTuning(format!(
            "fused lasso needs lambda >= 0, got {lambda}"
        )));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { j: pos + 1, k: 1 });
    }
    Ok(taut_string(y, absolute_penalty_weight(y.len(), lambda)))
}

/// Smallest per-vector `lambda` at which the fused lasso collapses to the
/// constant mean of `y` (the saturation level).
pub fn saturation_lambda(y: &[f64]) -> f64 {
    let m = y.len();
    if m == 0 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / m as f64;
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for &v in &y[..m - 1] {
        acc += v - mean;
        worst = worst.max(acc.abs());
    }
    worst / m as f64
}

/// Direct algorithm for `min_x (1/2)||y-x||^2 + lam * sum |x_{i+1}-x_i|`.
///
/// Maintains a running segment with lower/upper tube bounds and emits a
/// piecewise constant solution without iterating to a tolerance.
fn taut_string(y: &[f64], lam: f64) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    if n == 1 {
        x[0] = y[0];
        return x;
    }
    if lam == 0.0 {
        x.copy_from_slice(y);
        return x;
    }
    let last = n - 1;
    let mut k = 0usize; // current position
    let mut k0 = 0usize; // start of the running segment
    let mut km = 0usize; // last position where the lower bound was hit
    let mut kp = 0usize; // last position where the upper bound was hit
    let mut vmin = y[0] - lam;
    let mut vmax = y[0] + lam;
    let mut umin = lam;
    let mut umax = -lam;

    loop {
        if k == last {
            // Single trailing point after a restart.
            x[last] = vmin + umin;
            return x;
        }
        loop {
            if y[k + 1] + umin < vmin - lam {
                // The lower tube is violated: commit a negative jump.
                for v in &mut x[k0..=km] {
                    *v = vmin;
                }
                k = km + 1;
                k0 = k;
                km = k;
                kp = k;
                vmin = y[k];
                vmax = y[k] + 2.0 * lam;
                umin = lam;
                umax = -lam;
            } else if y[k + 1] + umax > vmax + lam {
                // The upper tube is violated: commit a positive jump.
                for v in &mut x[k0..=kp] {
                    *v = vmax;
                }
                k = kp + 1;
                k0 = k;
                km = k;
                kp = k;
                vmin = y[k] - 2.0 * lam;
                vmax = y[k];
                umin = lam;
                umax = -lam;
            } else {
                // Stay within the tube and tighten the bounds.
                k += 1;
                umin += y[k] - vmin;
                umax += y[k] - vmax;
                if umin >= lam {
                    vmin += (umin - lam) / (k - k0 + 1) as f64;
                    umin = lam;
                    km = k;
                }
                if umax <= -lam {
                    vmax += (umax + lam) / (k - k0 + 1) as f64;
                    umax = -lam;
                    kp = k;
                }
            }
            if k < last {
                continue;
            }
            // Reached the end of the signal: wrap up the open segment.
            if umin < 0.0 {
                for v in &mut x[k0..=km] {
                    *v = vmin;
                }
                k = km + 1;
                k0 = k;
                km = k;
                vmin = y[k];
                umin = lam;
                umax = y[k] + lam - vmax;
                break; // re-enter at the top with the shortened tail
            } else if umax > 0.0 {
                for v in &mut x[k0..=kp] {
                    *v = vmax;
                }
                k = kp + 1;
                k0 = k;
                kp = k;
                vmax = y[k];
                umax = -lam;
                umin = y[k] - lam - vmin;
                break;
            } else {
                let v = vmin + umin / (k - k0 + 1) as f64;
                for w in &mut x[k0..=last] {
                    *w = v;
                }
                return x;
            }
        }
    }
}

/// Generic convex oracle for the same objective, used to certify the
/// direct algorithm: projected gradient on the box-constrained dual
/// `min_u (1/2)||D^T u||^2 - u^T D y, |u| <= lam`, with `x = y - D^T u`.
///
/// Independent of the taut-string path; intended for small problems.
pub fn fused_lasso_oracle(y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let m = y.len();
    if m <= 1 {
        return y.to_vec();
    }
    let lam = absolute_penalty_weight(m, lambda);
    let dy: Vec<f64> = (1..m).map(|i| y[i] - y[i - 1]).collect();
    let mut u = vec![0.0; m - 1];
    let step = 0.25; // 1 / ||D D^T||, spectral norm at most 4
    for _ in 0..iters {
        // gradient = D D^T u - D y
        let mut grad = vec![0.0; m - 1];
        for i in 0..m - 1 {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < m - 1 { u[i + 1] } else { 0.0 };
            grad[i] = 2.0 * u[i] - left - right - dy[i];
        }
        for i in 0..m - 1 {
            u[i] = (u[i] - step * grad[i]).clamp(-lam, lam);
        }
    }
    // x = y - D^T u
    let mut x = y.to_vec();
    for i in 0..m {
        let incoming = if i > 0 { u[i - 1] } else { 0.0 };
        let outgoing = if i < m - 1 { u[i] } else { 0.0 };
        x[i] = y[i] - (incoming - outgoing);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn objective(y: &[f64], x: &[f64], lambda: f64) -> f64 {
        let m = y.len() as f64;
        let fit: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        fit / m + 2.0 * lambda * tv
    }

    #[test]
    fn lambda_zero_returns_input() {
        let y = vec![3.0, -1.0, 2.0, 7.0];
        assert_eq!(fused_lasso_1d(&y, 0.0).unwrap(), y);
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(fused_lasso_1d(&[1.0, 2.0], -0.1).is_err());
        assert!(fused_lasso_1d(&[], 0.1).is_err());
    }

    #[test]
    fn saturation_collapses_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = rng.random_range(1..12);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mean = y.iter().sum::<f64>() / m as f64;
            let sat = saturation_lambda(&y);
            let x = fused_lasso_1d(&y, sat + 1e-9).unwrap();
            for v in &x {
                assert!((v - mean).abs() < 1e-9, "not collapsed: {x:?} vs mean {mean}");
            }
            // Just below saturation the solution is not constant (when the
            // input itself is not constant).
            if sat > 1e-9 {
                let x = fused_lasso_1d(&y, sat * 0.95).unwrap();
                let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - x.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(spread > 0.0);
            }
        }
    }

    #[test]
    fn known_small_instances() {
        // Hand-checked optima.
        let x = fused_lasso_1d(&[0.0, 10.0], 0.5).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 9.0).abs() < 1e-12);

        let x = fused_lasso_1d(&[10.0, 0.0, 0.0], 1.0 / 3.0).unwrap();
        assert!((x[0] - 9.0).abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12 && (x[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matches_convex_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..300 {
            let m = rng.random_range(1..9);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let lambda = *[0.01, 0.1, 0.5, 2.0].choose(&mut rng).unwrap();
            let fast = fused_lasso_1d(&y, lambda).unwrap();
            let slow = fused_lasso_oracle(&y, lambda, 60_000);
            for i in 0..m {
                assert!(
                    (fast[i] - slow[i]).abs() < 1e-8,
                    "trial {trial}: {fast:?} vs {slow:?} (y={y:?}, lambda={lambda})"
                );
            }
            assert!(objective(&y, &fast, lambda) <= objective(&y, &slow, lambda) + 1e-12);
        }
    }

    #[test]
    fn length_five_matches_oracle_to_1e8() {
        let y = [1.0, -2.0, 0.5, 3.0, 2.5];
        let fast = fused_lasso_1d(&y, 0.1).unwrap();
        let slow = fused_lasso_oracle(&y, 0.1, 200_000);
        for i in 0..5 {
            assert!((fast[i] - slow[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn output_carries_an_exact_kkt_certificate() {
        // x minimizes (1/2)||y-x||^2 + w sum|dx| iff the partial sums
        // s_i = sum_{j<=i}(y_j - x_j) satisfy |s_i| <= w, s_i = -w*sign
        // at every jump of x, and s_m = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..100 {
            let m = rng.random_range(1..200);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let lambda = *[1e-6, 0.01, 0.08, 0.6].choose(&mut rng).unwrap();
            let x = fused_lasso_1d(&y, lambda).unwrap();
            let w = absolute_penalty_weight(m, lambda);
            let tol = 1e-9 * (1.0 + w) * m as f64;
            let mut s = 0.0;
            for i in 0..m {
                s += y[i] - x[i];
                if i + 1 < m {
                    assert!(s.abs() <= w + tol, "dual infeasible at {i}: |{s}| > {w}");
                    let jump = x[i + 1] - x[i];
                    if jump.abs() > 1e-9 {
                        assert!(
                            (s + w * jump.signum()).abs() <= tol,
                            "active dual not at the face: s={s}, jump={jump}, w={w}"
                        );
                    }
                }
            }
            assert!(s.abs() <= tol, "mean not preserved: {s}");
        }
    }

    #[test]
    fn preserves_mean_and_is_piecewise_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = rng.random_range(2..40);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lambda = rng.random_range(0.0..0.5);
            let x = fused_lasso_1d(&y, lambda).unwrap();
            let my: f64 = y.iter().sum::<f64>() / m as f64;
            let mx: f64 = x.iter().sum::<f64>() / m as f64;
            assert!((my - mx).abs() < 1e-10);
        }
    }
}

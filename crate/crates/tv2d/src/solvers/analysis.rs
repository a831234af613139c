//! Analysis-form reference solver for the interaction problem.
//!
//! Minimizes `||ytilde - f||_2^2/n + 2*lambda*||Delta f||_1` directly with
//! an accelerated primal-dual splitting scheme, certified by its duality
//! gap. Serves as the independent oracle against which the synthesis
//! coordinate-descent route is checked; capped to small grids.

use crate::error::{Error, Result};
use crate::image::{adjoint_derivative, total_derivative, DerivativeField, Image};
use crate::tolerances;

/// Largest grid side the reference solver accepts.
pub const ANALYSIS_SIZE_CAP: usize = 16;

/// Solves the analysis problem to the default duality gap.
pub fn analysis_oracle_solve(y_tilde: &Image, lambda: f64) -> Result<Image> {
    analysis_oracle_solve_with(
        y_tilde,
        lambda,
        tolerances::DUALITY_GAP_DEFAULT,
        5_000_000,
    )
}

/// Solves the analysis problem to duality gap `gap_tol`.
pub fn analysis_oracle_solve_with(
    y_tilde: &Image,
    lambda: f64,
    gap_tol: f64,
    max_iter: usize,
) -> Result<Image> {
    let (n1, n2) = y_tilde.dims();
    if n1 > ANALYSIS_SIZE_CAP || n2 > ANALYSIS_SIZE_CAP {
        return Err(Error::SizeCapExceeded {
            n1,
            n2,
            cap: ANALYSIS_SIZE_CAP,
        });
    }
    if n1 < 2 || n2 < 2 {
        return Err(Error::DimensionTooSmall { n1, n2 });
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidTuning(format!(
            "analysis solver needs lambda >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(y_tilde.clone());
    }

    let n = (n1 * n2) as f64;
    let bound = 2.0 * lambda; // dual box: |u| <= 2 lambda

    // Projected accelerated gradient on the dual
    //     min_{|u| <= 2 lambda}  (n/4)||D1^T u D2||^2 - <u, Delta y>,
    // which is strongly convex because the adjoint has full column
    // rank; gradient restarts keep the momentum in the linear regime.
    // The primal iterate is recovered as f = y - (n/2) D1^T u D2.
    let lip = 8.0 * n; // (n/2) * ||Delta||^2 <= 8n
    let step = 1.0 / lip;
    let d_y = total_derivative(y_tilde)?;

    let mut u = DerivativeField::zeros_for(n1, n2)?;
    let mut momentum = u.clone();
    let mut t_acc = 1.0f64;

    let primal_of = |u: &DerivativeField| -> Image {
        y_tilde.axpy(-0.5 * n, &adjoint_derivative(u))
    };

    for it in 0..max_iter {
        // grad = (n/2) Delta(adj(momentum)) - Delta y
        let adj_m = adjoint_derivative(&momentum);
        let d_adj = total_derivative(&adj_m)?;
        let mut u_next = momentum.clone();
        let mut restart_dot = 0.0;
        for j in 2..=n1 {
            for k in 2..=n2 {
                let g = 0.5 * n * d_adj.at(j, k) - d_y.at(j, k);
                let v = (momentum.at(j, k) - step * g).clamp(-bound, bound);
                restart_dot += g * (v - u.at(j, k));
                u_next.set(j, k, v);
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let (beta, t_new) = if restart_dot > 0.0 {
            (0.0, 1.0)
        } else {
            ((t_acc - 1.0) / t_next, t_next)
        };
        let mut m_next = u_next.clone();
        for j in 2..=n1 {
            for k in 2..=n2 {
                m_next.set(
                    j,
                    k,
                    u_next.at(j, k) + beta * (u_next.at(j, k) - u.at(j, k)),
                );
            }
        }
        u = u_next;
        momentum = m_next;
        t_acc = t_new;

        if it % 20 == 19 {
            let f = primal_of(&u);
            let gap = duality_gap(y_tilde, &f, &u, lambda, n, &d_y);
            if gap <= gap_tol {
                return Ok(f);
            }
        }
    }
    let f = primal_of(&u);
    let gap = duality_gap(y_tilde, &f, &u, lambda, n, &d_y);
    if gap <= gap_tol {
        Ok(f)
    } else {
        Err(Error::InvalidConfig(format!(
            "analysis solver stalled at duality gap {gap:.3e} (target {gap_tol:.3e})"
        )))
    }
}

/// Primal minus dual objective; the dual of
/// `min (1/n)||f-y||^2 + 2*lambda*||Delta f||_1` is
/// `max_{|u|<=2*lambda} <u, Delta y> - (n/4)||Delta^T u||^2`.
fn duality_gap(
    y: &Image,
    f: &Image,
    u: &DerivativeField,
    lambda: f64,
    n: f64,
    d_y: &DerivativeField,
) -> f64 {
    let primal = y.sub(f).norm_sq() / n
        + 2.0 * lambda * total_derivative(f).map(|d| d.abs_sum()).unwrap_or(0.0);
    let dual = u.dot(d_y) - 0.25 * n * adjoint_derivative(u).norm_sq();
    primal - dual
}

/// Analysis-form KKT certification for a candidate interaction estimate.
///
/// Finds the admissible subgradient that best explains the residual: on
/// the active set of `Delta f_hat` the dual variable is pinned to the
/// sign, elsewhere it ranges over `[-1, 1]`, and the reported value is
/// the max-abs remainder of `(ytilde - f_hat)/n - lambda * D1^T q D2`
/// after minimizing over admissible `q` (a box-constrained least squares
/// solved by accelerated projected gradient).
pub fn kkt_certify(y_tilde: &Image, f_hat: &Image, lambda: f64) -> Result<f64> {
    if y_tilde.dims() != f_hat.dims() {
        return Err(Error::DimensionMismatch {
            what: "kkt_certify",
            expected: y_tilde.dims(),
            got: f_hat.dims(),
        });
    }
    let (n1, n2) = y_tilde.dims();
    let n = (n1 * n2) as f64;
    let target = y_tilde.sub(f_hat).scale(1.0 / n);
    if lambda == 0.0 {
        return Ok(target.max_abs());
    }

    let d_hat = total_derivative(f_hat)?;
    // Coefficients smaller than numerical dust count as inactive; the
    // box constraint contains the forced sign in either reading.
    let active_tol = 1e-9 * d_hat.max_abs().max(1.0);
    let signs = DerivativeField::from_fn(n1, n2, |j, k| {
        let v = d_hat.at(j, k);
        if v > active_tol {
            1.0
        } else if v < -active_tol {
            -1.0
        } else {
            0.0
        }
    })?;

    let project = |q: &mut DerivativeField| {
        for j in 2..=n1 {
            for k in 2..=n2 {
                let s = signs.at(j, k);
                let v = if s != 0.0 {
                    s
                } else {
                    q.at(j, k).clamp(-1.0, 1.0)
                };
                q.set(j, k, v);
            }
        }
    };

    // minimize ||target - lambda * adj(q)||^2 over the box with pinned
    // active entries; Lipschitz constant of the gradient map.
    let lip = 2.0 * lambda * lambda * 16.0;
    let step = 1.0 / lip;
    let mut q = signs.clone();
    project(&mut q);
    let mut momentum = q.clone();
    let mut t_acc = 1.0f64;
    let residual_of = |q: &DerivativeField| -> Image {
        target.axpy(-lambda, &adjoint_derivative(q))
    };

    let max_iter = 200_000;
    for it in 0..max_iter {
        let resid = residual_of(&momentum);
        let grad = total_derivative(&resid)?; // d/dq ||r||^2 = -2 lam Delta r
        let mut q_next = momentum.clone();
        for j in 2..=n1 {
            for k in 2..=n2 {
                q_next.set(
                    j,
                    k,
                    momentum.at(j, k) + step * 2.0 * lambda * grad.at(j, k),
                );
            }
        }
        project(&mut q_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let beta = (t_acc - 1.0) / t_next;
        let mut moved = 0.0f64;
        let mut m_next = q_next.clone();
        for j in 2..=n1 {
            for k in 2..=n2 {
                let delta = q_next.at(j, k) - q.at(j, k);
                moved = moved.max(delta.abs());
                m_next.set(j, k, q_next.at(j, k) + beta * delta);
            }
        }
        q = q_next;
        momentum = m_next;
        t_acc = t_next;
        if moved < 1e-13 && it > 10 {
            break;
        }
    }
    Ok(residual_of(&q).max_abs())
}

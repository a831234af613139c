//! Noise weights and interpolating matrices over a rectangular
//! tessellation.

use crate::error::{Error, Result};
use crate::image::DerivativeField;
use crate::theory::tessellation::Tessellation;

/// Noise weights `v` on `[2:n1] x [2:n2]`, together with the unscaled
/// antiprojection bound `vtilde` and the inverse scaling factor
/// `gamma_tilde = 2*sqrt(d1max/n1 + d2max/n2)` that links them
/// (`v >= vtilde / gamma_tilde` pointwise).
#[derive(Debug, Clone)]
pub struct WeightField {
    pub v: DerivativeField,
    pub v_tilde: DerivativeField,
    pub gamma_tilde: f64,
}

/// Inverse scaling factor of a tessellation.
pub fn gamma_tilde(tess: &Tessellation) -> f64 {
    let (n1, n2) = tess.dims();
    2.0 * (tess.d1_max() as f64 / n1 as f64 + tess.d2_max() as f64 / n2 as f64).sqrt()
}

/// Weight value at offsets `(x, y) = (|j-t1|/d1, |k-t2|/d2)`.
fn weight_formula(x: f64, y: f64) -> f64 {
    1.0 - 0.5 * (1.0 - x.sqrt()) * (1.0 - y) - 0.5 * (1.0 - x) * (1.0 - y.sqrt())
}

/// Builds the weights on every inner-grid point: 0 at the jumps, 1 on
/// every rectangle boundary, in `[0,1]` throughout.
pub fn noise_weights(tess: &Tessellation) -> WeightField {
    let (n1, n2) = tess.dims();
    let mut v = DerivativeField::zeros_for(n1, n2).expect("inner grid exists");
    let mut v_tilde = v.clone();
    for j in 2..=n1 {
        for k in 2..=n2 {
            let m = tess
                .rect_containing(j, k)
                .expect("tessellation covers the inner grid");
            let rect = &tess.rects()[m];
            let (t1, t2) = rect.jump;
            let (d1m, d1p, d2m, d2p) = rect.distances();
            let dj = j.abs_diff(t1);
            let dk = k.abs_diff(t2);
            let d1 = if j > t1 { d1p } else { d1m };
            let d2 = if k > t2 { d2p } else { d2m };
            let x = dj as f64 / d1 as f64;
            let y = dk as f64 / d2 as f64;
            v.set(j, k, weight_formula(x, y));
            v_tilde.set(
                j,
                k,
                (dj as f64 / n1 as f64 + dk as f64 / n2 as f64).sqrt(),
            );
        }
    }
    WeightField {
        v,
        v_tilde,
        gamma_tilde: gamma_tilde(tess),
    }
}

/// An interpolating matrix: `+/-(1 - v)` on each rectangle according to
/// the sign of its jump, hence exactly the sign configuration on the
/// active set and zero on all rectangle boundaries.
#[derive(Debug, Clone)]
pub struct InterpolatingMatrix {
    pub w: DerivativeField,
    /// One sign per jump, aligned with the tessellation's rectangles.
    pub signs: Vec<i8>,
}

pub fn interpolating_matrix(tess: &Tessellation, signs: &[i8]) -> Result<InterpolatingMatrix> {
    if signs.len() != tess.s() || signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::SignConfigMismatch(signs.len(), tess.s()));
    }
    let (n1, n2) = tess.dims();
    let weights = noise_weights(tess);
    let mut w = DerivativeField::zeros_for(n1, n2).expect("inner grid exists");
    for j in 2..=n1 {
        for k in 2..=n2 {
            let m = tess.rect_containing(j, k).expect("covered");
            w.set(j, k, signs[m] as f64 * (1.0 - weights.v.at(j, k)));
        }
    }
    Ok(InterpolatingMatrix {
        w,
        signs: signs.to_vec(),
    })
}

//! Images, the two-dimensional total discrete derivative and the ANOVA
//! decomposition.
//!
//! Indexing follows the 1-indexed convention `(j,k) in [1:n1] x [1:n2]`
//! throughout; [`DerivativeField`] documents the offset of its storage.

use crate::error::{Error, Result};

/// A real-valued `n1 x n2` pixel matrix, 1-indexed, stored row-major.
///
/// Images are immutable values once built through the checked
/// constructors; all operations on them are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major data, rejecting non-finite entries.
    pub fn new(n1: usize, n2: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n1 * n2 {
            return Err(Error::DimensionMismatch {
                what: "Image::new",
                expected: (n1, n2),
                got: (data.len() / n2.max(1), n2),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                j: pos / n2 + 1,
                k: pos % n2 + 1,
            });
        }
        Ok(Self { n1, n2, data })
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            data: vec![0.0; n1 * n2],
        }
    }

    pub fn constant(n1: usize, n2: usize, value: f64) -> Self {
        Self {
            n1,
            n2,
            data: vec![value; n1 * n2],
        }
    }

    /// Builds an image entry by entry; `f` receives 1-indexed `(j,k)`.
    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n1 * n2);
        for j in 1..=n1 {
            for k in 1..=n2 {
                data.push(f(j, k));
            }
        }
        Self { n1, n2, data }
    }

    pub fn rows(&self) -> usize {
        self.n1
    }

    pub fn cols(&self) -> usize {
        self.n2
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Total pixel count `n = n1 * n2`.
    pub fn pixel_count(&self) -> usize {
        self.n1 * self.n2
    }

    /// Entry `f(j,k)`, 1-indexed.
    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        debug_assert!(1 <= j && j <= self.n1 && 1 <= k && k <= self.n2);
        self.data[(j - 1) * self.n2 + (k - 1)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        debug_assert!(1 <= j && j <= self.n1 && 1 <= k && k <= self.n2);
        self.data[(j - 1) * self.n2 + (k - 1)] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trace inner product `<self, other>`.
    pub fn dot(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Image) -> Image {
        debug_assert_eq!(self.dims(), other.dims());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Image {
            n1: self.n1,
            n2: self.n2,
            data,
        }
    }

    pub fn scale(&self, alpha: f64) -> Image {
        Image {
            n1: self.n1,
            n2: self.n2,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sub(&self, other: &Image) -> Image {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Image) -> Image {
        self.axpy(1.0, other)
    }

    /// Maximum absolute entry difference.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Values of the total derivative, living on `(j,k) in [2:n1] x [2:n2]`.
///
/// Storage slot `(a,b) in [1:n1-1] x [1:n2-1]` holds the entry at
/// `(j,k) = (a+1, b+1)`; accessors take the inner-grid `(j,k)` directly.
///
/// The same grid and index convention carries the noise weights and
/// interpolating matrices of the risk-bound machinery, so those reuse
/// this type.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeField {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DerivativeField {
    /// Zero field for the inner grid of an `n1 x n2` image.
    pub fn zeros_for(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::DimensionTooSmall { n1, n2 });
        }
        Ok(Self {
            rows: n1 - 1,
            cols: n2 - 1,
            data: vec![0.0; (n1 - 1) * (n2 - 1)],
        })
    }

    /// Builds a field entry by entry; `f` receives `(j,k) in [2:n1] x [2:n2]`.
    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut field = Self::zeros_for(n1, n2)?;
        for j in 2..=n1 {
            for k in 2..=n2 {
                field.set(j, k, f(j, k));
            }
        }
        Ok(field)
    }

    /// Number of stored rows, `n1 - 1`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of stored columns, `n2 - 1`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row count of the source image.
    pub fn image_rows(&self) -> usize {
        self.rows + 1
    }

    /// Column count of the source image.
    pub fn image_cols(&self) -> usize {
        self.cols + 1
    }

    /// Entry at `(j,k) in [2:n1] x [2:n2]`.
    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        debug_assert!(2 <= j && j <= self.rows + 1 && 2 <= k && k <= self.cols + 1);
        self.data[(j - 2) * self.cols + (k - 2)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        debug_assert!(2 <= j && j <= self.rows + 1 && 2 <= k && k <= self.cols + 1);
        self.data[(j - 2) * self.cols + (k - 2)] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of absolute entries.
    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &DerivativeField) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Count of entries with `|value| > threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.data.iter().filter(|v| v.abs() > threshold).count()
    }
}

/// The four mutually orthogonal ANOVA components of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaParts {
    /// Global mean `f(o,o)`.
    pub global_mean: f64,
    /// Row main effects `f(j,o)`, length `n1`, summing to zero.
    pub row_effects: Vec<f64>,
    /// Column main effects `f(o,k)`, length `n2`, summing to zero.
    pub col_effects: Vec<f64>,
    /// Interaction terms: doubly centered `n1 x n2` image.
    pub interactions: Image,
}

impl AnovaParts {
    pub fn dims(&self) -> (usize, usize) {
        self.interactions.dims()
    }

    /// Squared Frobenius norms of the four component matrices
    /// `(n*mean^2, ||row part||^2, ||col part||^2, ||interactions||^2)`.
    pub fn component_norms_sq(&self) -> (f64, f64, f64, f64) {
        let (n1, n2) = self.dims();
        let n = (n1 * n2) as f64;
        let row: f64 = self.row_effects.iter().map(|v| v * v).sum::<f64>() * n2 as f64;
        let col: f64 = self.col_effects.iter().map(|v| v * v).sum::<f64>() * n1 as f64;
        (
            n * self.global_mean * self.global_mean,
            row,
            col,
            self.interactions.norm_sq(),
        )
    }
}

/// Total derivative `Delta f = D1 f D2^T`, with
/// `(Delta f)_{j,k} = f(j,k) - f(j,k-1) - f(j-1,k) + f(j-1,k-1)`.
pub fn total_derivative(f: &Image) -> Result<DerivativeField> {
    let (n1, n2) = f.dims();
    if n1 < 2 || n2 < 2 {
        return Err(Error::DimensionTooSmall { n1, n2 });
    }
    DerivativeField::from_fn(n1, n2, |j, k| {
        f.at(j, k) - f.at(j, k - 1) - f.at(j - 1, k) + f.at(j - 1, k - 1)
    })
}

/// Adjoint of the total derivative: `w -> D1^T w D2`.
///
/// Satisfies `<w, Delta f> = <adjoint_derivative(w), f>` for every `w`
/// and `f` of matching dimensions.
pub fn adjoint_derivative(w: &DerivativeField) -> Image {
    let n1 = w.image_rows();
    let n2 = w.image_cols();
    // Zero-padded backward second difference: entries of w outside
    // [2:n1] x [2:n2] count as zero.
    let get = |j: usize, k: usize| -> f64 {
        if (2..=n1).contains(&j) && (2..=n2).contains(&k) {
            w.at(j, k)
        } else {
            0.0
        }
    };
    Image::from_fn(n1, n2, |j, k| {
        get(j, k) - get(j, k + 1) - get(j + 1, k) + get(j + 1, k + 1)
    })
}

/// Total variation `TV(f) = || Delta f ||_1`.
pub fn tv(f: &Image) -> Result<f64> {
    Ok(total_derivative(f)?.abs_sum())
}

/// Total variation of the row main effects.
pub fn tv1(f: &Image) -> f64 {
    let parts = anova_decompose(f);
    parts
        .row_effects
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .sum()
}

/// Total variation of the column main effects.
pub fn tv2(f: &Image) -> f64 {
    let parts = anova_decompose(f);
    parts
        .col_effects
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .sum()
}

/// Splits an image into global mean, main effects and interactions.
pub fn anova_decompose(f: &Image) -> AnovaParts {
    let (n1, n2) = f.dims();
    let n = (n1 * n2) as f64;
    let mut row_means = vec![0.0; n1];
    let mut col_means = vec![0.0; n2];
    let mut total = 0.0;
    for j in 1..=n1 {
        for k in 1..=n2 {
            let v = f.at(j, k);
            row_means[j - 1] += v;
            col_means[k - 1] += v;
            total += v;
        }
    }
    let global_mean = total / n;
    for m in row_means.iter_mut() {
        *m /= n2 as f64;
    }
    for m in col_means.iter_mut() {
        *m /= n1 as f64;
    }
    let row_effects: Vec<f64> = row_means.iter().map(|m| m - global_mean).collect();
    let col_effects: Vec<f64> = col_means.iter().map(|m| m - global_mean).collect();
    let interactions = Image::from_fn(n1, n2, |j, k| {
        f.at(j, k) - row_means[j - 1] - col_means[k - 1] + global_mean
    });
    AnovaParts {
        global_mean,
        row_effects,
        col_effects,
        interactions,
    }
}

/// Rebuilds `f = f(o,o) + f(.,o) + f(o,.) + interactions`.
pub fn anova_recompose(parts: &AnovaParts) -> Result<Image> {
    let (n1, n2) = parts.interactions.dims();
    if parts.row_effects.len() != n1 || parts.col_effects.len() != n2 {
        return Err(Error::DimensionMismatch {
            what: "anova_recompose",
            expected: (n1, n2),
            got: (parts.row_effects.len(), parts.col_effects.len()),
        });
    }
    Ok(Image::from_fn(n1, n2, |j, k| {
        parts.global_mean
            + parts.row_effects[j - 1]
            + parts.col_effects[k - 1]
            + parts.interactions.at(j, k)
    }))
}

/// Interaction part of an image (shorthand for decompose + take).
pub fn interaction_part(f: &Image) -> Image {
    anova_decompose(f).interactions
}

/// Max absolute row/column sum, used to decide whether an image is
/// doubly centered.
pub fn centering_defect(f: &Image) -> (f64, f64) {
    let (n1, n2) = f.dims();
    let mut max_row = 0.0f64;
    for j in 1..=n1 {
        let s: f64 = (1..=n2).map(|k| f.at(j, k)).sum();
        max_row = max_row.max(s.abs());
    }
    let mut max_col = 0.0f64;
    for k in 1..=n2 {
        let s: f64 = (1..=n1).map(|j| f.at(j, k)).sum();
        max_col = max_col.max(s.abs());
    }
    (max_row, max_col)
}

//! Active sets of jump locations and rectangular tessellations of the
//! inner grid `[2:n1] x [2:n2]`.

use crate::error::{Axis, Error, Result};
use std::collections::BTreeSet;

/// Ordered list of jump locations inside `[3:n1-1] x [3:n2-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    n1: usize,
    n2: usize,
    jumps: Vec<(usize, usize)>,
}

impl ActiveSet {
    pub fn new(jumps: Vec<(usize, usize)>, n1: usize, n2: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(j, k) in &jumps {
            if j < 3 || j + 1 > n1 || k < 3 || k + 1 > n2 {
                return Err(Error::JumpOutOfRange { j, k, n1, n2 });
            }
            if !seen.insert((j, k)) {
                return Err(Error::DuplicateJump { j, k });
            }
        }
        Ok(Self { n1, n2, jumps })
    }

    pub fn empty(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            jumps: Vec::new(),
        }
    }

    /// Evenly spaced `rows x cols` product grid of jumps.
    pub fn regular_grid(rows: usize, cols: usize, n1: usize, n2: usize) -> Result<Self> {
        let place = |count: usize, extent: usize| -> Vec<usize> {
            (1..=count)
                .map(|i| {
                    let raw = (i * (extent + 1)) as f64 / (count + 1) as f64;
                    (raw.round() as usize).clamp(3, extent.saturating_sub(1))
                })
                .collect()
        };
        let rs = place(rows, n1);
        let cs = place(cols, n2);
        let mut jumps = Vec::with_capacity(rows * cols);
        for &r in &rs {
            for &c in &cs {
                jumps.push((r, c));
            }
        }
        Self::new(jumps, n1, n2)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn jumps(&self) -> &[(usize, usize)] {
        &self.jumps
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.jumps.contains(&(j, k))
    }
}

/// One rectangle of a tessellation, with its interior jump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TessRect {
    /// The jump `(t1, t2)` interior to the rectangle.
    pub jump: (usize, usize),
    /// Row range `[t1^-, t1^+]`.
    pub row_range: (usize, usize),
    /// Column range `[t2^-, t2^+]`.
    pub col_range: (usize, usize),
}

impl TessRect {
    /// `(d1^-, d1^+, d2^-, d2^+)`: distances from the jump to the sides.
    pub fn distances(&self) -> (usize, usize, usize, usize) {
        let (t1, t2) = self.jump;
        (
            t1 - self.row_range.0,
            self.row_range.1 - t1,
            t2 - self.col_range.0,
            self.col_range.1 - t2,
        )
    }

    /// Quadrant areas `(d^--, d^-+, d^++, d^+-)`.
    pub fn quadrant_areas(&self) -> (f64, f64, f64, f64) {
        let (d1m, d1p, d2m, d2p) = self.distances();
        (
            (d1m * d2m) as f64,
            (d1m * d2p) as f64,
            (d1p * d2p) as f64,
            (d1p * d2m) as f64,
        )
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.row_range.0 <= j && j <= self.row_range.1 && self.col_range.0 <= k && k <= self.col_range.1
    }

    pub fn contains_interior(&self, j: usize, k: usize) -> bool {
        self.row_range.0 < j && j < self.row_range.1 && self.col_range.0 < k && k < self.col_range.1
    }

    pub fn on_boundary(&self, j: usize, k: usize) -> bool {
        self.contains(j, k) && !self.contains_interior(j, k)
    }
}

/// Rectangles `{R_m}` covering `[2:n1] x [2:n2]` with pairwise disjoint
/// interiors, one jump interior to each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tessellation {
    n1: usize,
    n2: usize,
    rects: Vec<TessRect>,
}

impl Tessellation {
    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn rects(&self) -> &[TessRect] {
        &self.rects
    }

    pub fn s(&self) -> usize {
        self.rects.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.n1 * self.n2
    }

    /// Index of the first rectangle containing `(j,k)`; boundary points
    /// belong to several, the choice is immaterial for all consumers.
    pub fn rect_containing(&self, j: usize, k: usize) -> Option<usize> {
        self.rects.iter().position(|r| r.contains(j, k))
    }

    /// Maximal horizontal jump-to-side distance `d_{1,max}(S)`.
    pub fn d1_max(&self) -> usize {
        self.rects
            .iter()
            .map(|r| {
                let (d1m, d1p, _, _) = r.distances();
                d1m.max(d1p)
            })
            .max()
            .unwrap_or(0)
    }

    /// Maximal vertical jump-to-side distance `d_{2,max}(S)`.
    pub fn d2_max(&self) -> usize {
        self.rects
            .iter()
            .map(|r| {
                let (_, _, d2m, d2p) = r.distances();
                d2m.max(d2p)
            })
            .max()
            .unwrap_or(0)
    }

    /// Checks the four defining conditions: rectangles inside the inner
    /// grid, full coverage, pairwise disjoint interiors, every jump
    /// interior to its rectangle.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        for r in &self.rects {
            if r.row_range.0 < 2
                || r.row_range.1 > self.n1
                || r.col_range.0 < 2
                || r.col_range.1 > self.n2
            {
                return Err(bad(format!("rectangle {r:?} leaves the inner grid")));
            }
            if !r.contains_interior(r.jump.0, r.jump.1) {
                return Err(bad(format!("jump {:?} not interior", r.jump)));
            }
        }
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                let covering = self.rects.iter().filter(|r| r.contains(j, k)).count();
                if covering == 0 {
                    return Err(bad(format!("point ({j},{k}) uncovered")));
                }
                let interior = self
                    .rects
                    .iter()
                    .filter(|r| r.contains_interior(j, k))
                    .count();
                if interior > 1 {
                    return Err(bad(format!("point ({j},{k}) in {interior} interiors")));
                }
            }
        }
        Ok(())
    }
}

/// Builds the midpoint tessellation of a product-grid active set.
///
/// The distinct row and column coordinates must form a full product grid
/// (every combination present); cells are split halfway between adjacent
/// jump coordinates. Sets that are not grid-alignable are rejected with
/// the offending pair or cell.
pub fn build_tessellation(s: &ActiveSet, n1: usize, n2: usize) -> Result<Tessellation> {
    if s.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    if s.dims() != (n1, n2) {
        return Err(Error::DimensionMismatch {
            what: "build_tessellation",
            expected: s.dims(),
            got: (n1, n2),
        });
    }
    let rows: Vec<usize> = {
        let mut v: Vec<usize> = s.jumps().iter().map(|&(j, _)| j).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let cols: Vec<usize> = {
        let mut v: Vec<usize> = s.jumps().iter().map(|&(_, k)| k).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    // Product structure: each (row, col) combination must be a jump.
    for &r in &rows {
        for &c in &cols {
            if !s.contains(r, c) {
                return Err(Error::NonProductActiveSet { row: r, col: c });
            }
        }
    }
    // (s = rows*cols follows from no-duplicates + product check)

    let cuts = |coords: &[usize], lo: usize, hi: usize, axis: Axis| -> Result<Vec<usize>> {
        let mut c = Vec::with_capacity(coords.len() + 1);
        c.push(lo);
        for w in coords.windows(2) {
            let mid = (w[0] + w[1]) / 2;
            if mid <= w[0] || mid >= w[1] {
                return Err(Error::UnsplittablePair {
                    axis,
                    first: w[0],
                    second: w[1],
                });
            }
            c.push(mid);
        }
        c.push(hi);
        Ok(c)
    };
    let row_cuts = cuts(&rows, 2, n1, Axis::Rows)?;
    let col_cuts = cuts(&cols, 2, n2, Axis::Cols)?;

    let mut rects = Vec::with_capacity(rows.len() * cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            rects.push(TessRect {
                jump: (r, c),
                row_range: (row_cuts[i], row_cuts[i + 1]),
                col_range: (col_cuts[j], col_cuts[j + 1]),
            });
        }
    }
    let tess = Tessellation { n1, n2, rects };
    debug_assert!(tess.validate().is_ok());
    Ok(tess)
}

/// `||(Delta g)_{-S}||_1`: absolute sum of the off-active derivative.
pub fn off_active_abs_sum(d: &crate::image::DerivativeField, s: &ActiveSet) -> f64 {
    let mut total = 0.0;
    for j in 2..=d.image_rows() {
        for k in 2..=d.image_cols() {
            if !s.contains(j, k) {
                total += d.at(j, k).abs();
            }
        }
    }
    total
}

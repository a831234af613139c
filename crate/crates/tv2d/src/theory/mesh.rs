//! Mesh-grid active sets and their uniform antiprojection bound.
//!
//! A mesh grid crosses a dense set of rows with a sparse set of node
//! columns and vice versa; its atoms approximate every quadrant
//! indicator well enough that the antiprojection bound no longer grows
//! with the grid, which is what buys the slow rate.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MeshGrid {
    pub t1: usize,
    pub t2: usize,
    pub n1: usize,
    pub n2: usize,
    /// Dense row positions, `t1^2` of them.
    pub m1: Vec<usize>,
    /// Node row positions, `t1` of them, a subset of `m1`.
    pub n1_set: Vec<usize>,
    /// Dense column positions, `t2^2` of them.
    pub m2: Vec<usize>,
    /// Node column positions, `t2` of them, a subset of `m2`.
    pub n2_set: Vec<usize>,
    /// The mesh `S_M = M1 x N2 union N1 x M2`, sorted lexicographically.
    pub points: Vec<(usize, usize)>,
    /// The nodes `S_N = N1 x N2`.
    pub nodes: Vec<(usize, usize)>,
    /// Deterministic augmentation points (lexicographically smallest
    /// members of `M1 x M2` outside the mesh), at most `t1*t2` of them.
    pub extra: Vec<(usize, usize)>,
}

impl MeshGrid {
    /// `|S_M| = t1^2 t2 + t1 t2^2 - t1 t2` before augmentation.
    pub fn base_cardinality(&self) -> usize {
        self.points.len()
    }

    /// The bookkeeping cardinality `t1 t2 (t1 + t2)` used by the
    /// slow-rate schedule (base plus `t1*t2` augmentation points).
    pub fn augmented_cardinality(&self) -> usize {
        self.t1 * self.t2 * (self.t1 + self.t2)
    }

    pub fn augmented_points(&self) -> Vec<(usize, usize)> {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&self.extra);
        pts
    }
}

fn nearest_multiple(n: usize, q: usize) -> usize {
    let lo = (n / q).max(1) * q;
    let hi = lo + q;
    if n.saturating_sub(lo) <= hi - n {
        lo
    } else {
        hi
    }
}

/// Builds the mesh grid of Definition-style positions; `n1/(t1^2+1)` and
/// `n2/(t2^2+1)` must be integers.
pub fn build_mesh_grid(t1: usize, t2: usize, n1: usize, n2: usize) -> Result<MeshGrid> {
    if t1 == 0 || t2 == 0 {
        return Err(Error::InvalidConfig("mesh parameters must be positive".into()));
    }
    let q1 = t1 * t1 + 1;
    let q2 = t2 * t2 + 1;
    if !n1.is_multiple_of(q1) || !n2.is_multiple_of(q2) {
        return Err(Error::MeshDivisibility {
            n1,
            n2,
            t1,
            t2,
            suggested_n1: nearest_multiple(n1, q1),
            suggested_n2: nearest_multiple(n2, q2),
        });
    }
    let step1 = n1 / q1;
    let step2 = n2 / q2;
    let half1 = t1.div_ceil(2);
    let half2 = t2.div_ceil(2);

    let m1: Vec<usize> = (1..=t1 * t1).map(|i| 1 + i * step1).collect();
    let n1_set: Vec<usize> = (0..t1).map(|l| 1 + (half1 + t1 * l) * step1).collect();
    let m2: Vec<usize> = (1..=t2 * t2).map(|i| 1 + i * step2).collect();
    let n2_set: Vec<usize> = (0..t2).map(|l| 1 + (half2 + t2 * l) * step2).collect();

    let mut points = std::collections::BTreeSet::new();
    for &j in &m1 {
        for &k in &n2_set {
            points.insert((j, k));
        }
    }
    for &j in &n1_set {
        for &k in &m2 {
            points.insert((j, k));
        }
    }
    let points: Vec<(usize, usize)> = points.into_iter().collect();
    debug_assert_eq!(points.len(), t1 * t1 * t2 + t1 * t2 * t2 - t1 * t2);

    let mut nodes = Vec::with_capacity(t1 * t2);
    for &j in &n1_set {
        for &k in &n2_set {
            nodes.push((j, k));
        }
    }

    let mut extra = Vec::new();
    'outer: for &j in &m1 {
        for &k in &m2 {
            if extra.len() >= t1 * t2 {
                break 'outer;
            }
            if points.binary_search(&(j, k)).is_err() {
                extra.push((j, k));
            }
        }
    }

    Ok(MeshGrid {
        t1,
        t2,
        n1,
        n2,
        m1,
        n1_set,
        m2,
        n2_set,
        points,
        nodes,
        extra,
    })
}

/// Uniform antiprojection bound for a mesh grid:
/// `1/t1^2 + 1/t2^2 + ceil(t1/2)*ceil(t2/2)/(t1^2 t2^2)`.
pub fn mesh_antiprojection_bound(t1: usize, t2: usize) -> f64 {
    let (a, b) = ((t1 * t1) as f64, (t2 * t2) as f64);
    1.0 / a + 1.0 / b + (t1.div_ceil(2) * t2.div_ceil(2)) as f64 / (a * b)
}

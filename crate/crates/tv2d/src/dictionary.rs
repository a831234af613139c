//! The synthesis dictionary of half-interval indicator atoms.
//!
//! The atom `psi^{j,k}` is the indicator of the South-East quadrant
//! `{rows >= j, cols >= k}`; its centered version `psitilde^{j,k}` has the
//! additive (global mean / row / column) part projected out. Coefficients
//! of the centered expansion coincide with the total derivative on the
//! interaction block, which is what makes the synthesis route to the
//! interaction estimator work.
//!
//! Atoms are only materialized on demand. All solver-facing inner
//! products go through the closed-form overlap arithmetic below and never
//! touch a dense Gram matrix.

use crate::error::{Error, Result};
use crate::image::{anova_decompose, Image};

/// Index of a dictionary atom, `(j,k) in [1:n1] x [1:n2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AtomIndex {
    pub j: usize,
    pub k: usize,
}

impl AtomIndex {
    pub fn new(j: usize, k: usize) -> Self {
        Self { j, k }
    }

    fn check(self, n1: usize, n2: usize) -> Result<Self> {
        if self.j < 1 || self.j > n1 || self.k < 1 || self.k > n2 {
            return Err(Error::IndexOutOfRange {
                j: self.j,
                k: self.k,
                n1,
                n2,
            });
        }
        Ok(self)
    }

    /// True when the index lies in the interaction block `[2:n1] x [2:n2]`.
    pub fn is_interaction(self) -> bool {
        self.j >= 2 && self.k >= 2
    }
}

/// Coefficients of the centered expansion, laid out as a full `n1 x n2`
/// matrix: the `(1,1)` cell carries the global mean, the first column the
/// row-effect differences, the first row the column-effect differences
/// and the block `[2:n1] x [2:n2]` the interaction coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            data: vec![0.0; n1 * n2],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

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

    /// Sum of absolute interaction coefficients; equals `TV` of the
    /// synthesized image.
    pub fn interaction_abs_sum(&self) -> f64 {
        let mut s = 0.0;
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                s += self.at(j, k).abs();
            }
        }
        s
    }

    /// Number of interaction coefficients with `|value| > threshold`.
    pub fn interaction_support(&self, threshold: f64) -> usize {
        let mut c = 0;
        for j in 2..=self.n1 {
            for k in 2..=self.n2 {
                if self.at(j, k).abs() > threshold {
                    c += 1;
                }
            }
        }
        c
    }
}

/// `psi^{j,k}`: 1 on `{rows >= j, cols >= k}`, 0 elsewhere.
pub fn atom(idx: AtomIndex, n1: usize, n2: usize) -> Result<Image> {
    let idx = idx.check(n1, n2)?;
    Ok(Image::from_fn(n1, n2, |j, k| {
        if j >= idx.j && k >= idx.k {
            1.0
        } else {
            0.0
        }
    }))
}

/// `psitilde^{j,k}`: the atom with its additive part removed.
///
/// For interaction indices the result is doubly centered; first-column
/// and first-row atoms lose only their global mean (closed forms
/// `psi^{j,1}(o,o) = 1-(j-1)/n1` and `psi^{1,k}(o,o) = 1-(k-1)/n2`), and
/// `(1,1)` stays the all-ones matrix.
pub fn centered_atom(idx: AtomIndex, n1: usize, n2: usize) -> Result<Image> {
    let idx = idx.check(n1, n2)?;
    let (j0, k0) = (idx.j, idx.k);
    match (j0 >= 2, k0 >= 2) {
        (false, false) => Ok(Image::constant(n1, n2, 1.0)),
        (true, false) => {
            let mean = (n1 - j0 + 1) as f64 / n1 as f64;
            Ok(Image::from_fn(n1, n2, |j, _| {
                (if j >= j0 { 1.0 } else { 0.0 }) - mean
            }))
        }
        (false, true) => {
            let mean = (n2 - k0 + 1) as f64 / n2 as f64;
            Ok(Image::from_fn(n1, n2, |_, k| {
                (if k >= k0 { 1.0 } else { 0.0 }) - mean
            }))
        }
        (true, true) => {
            let row_mean = (n2 - k0 + 1) as f64 / n2 as f64;
            let col_mean = (n1 - j0 + 1) as f64 / n1 as f64;
            let global = row_mean * col_mean;
            Ok(Image::from_fn(n1, n2, |j, k| {
                let v = if j >= j0 && k >= k0 { 1.0 } else { 0.0 };
                let r = if j >= j0 { row_mean } else { 0.0 };
                let c = if k >= k0 { col_mean } else { 0.0 };
                v - r - c + global
            }))
        }
    }
}

/// Coefficients expressing `f` over the centered dictionary: the global
/// mean, successive differences of the main effects, and the total
/// derivative on the interaction block.
pub fn expansion_coefficients(f: &Image) -> CoefficientField {
    let (n1, n2) = f.dims();
    let parts = anova_decompose(f);
    let mut c = CoefficientField::zeros(n1, n2);
    c.set(1, 1, parts.global_mean);
    for j in 2..=n1 {
        c.set(j, 1, parts.row_effects[j - 1] - parts.row_effects[j - 2]);
    }
    for k in 2..=n2 {
        c.set(1, k, parts.col_effects[k - 1] - parts.col_effects[k - 2]);
    }
    for j in 2..=n1 {
        for k in 2..=n2 {
            c.set(
                j,
                k,
                f.at(j, k) - f.at(j, k - 1) - f.at(j - 1, k) + f.at(j - 1, k - 1),
            );
        }
    }
    c
}

/// Synthesizes `sum beta_{j,k} psitilde^{j,k}` in `O(n)` via prefix sums
/// followed by recentering; inverse of [`expansion_coefficients`].
pub fn synthesize(coeffs: &CoefficientField) -> Image {
    let (n1, n2) = coeffs.dims();

    // Row-effect part: cumulative sums of the first column, recentered.
    let mut row = vec![0.0; n1];
    for j in 2..=n1 {
        row[j - 1] = row[j - 2] + coeffs.at(j, 1);
    }
    let row_mean: f64 = row.iter().sum::<f64>() / n1 as f64;
    for v in row.iter_mut() {
        *v -= row_mean;
    }

    let mut col = vec![0.0; n2];
    for k in 2..=n2 {
        col[k - 1] = col[k - 2] + coeffs.at(1, k);
    }
    let col_mean: f64 = col.iter().sum::<f64>() / n2 as f64;
    for v in col.iter_mut() {
        *v -= col_mean;
    }

    // Interaction part: 2D prefix sums of the interaction block give the
    // uncentered combination of quadrant indicators; double centering
    // projects it onto the interaction subspace atom by atom.
    let mut prefix = Image::zeros(n1, n2);
    for j in 2..=n1 {
        for k in 2..=n2 {
            let p = prefix.at(j - 1, k) + prefix.at(j, k - 1) - prefix.at(j - 1, k - 1)
                + coeffs.at(j, k);
            prefix.set(j, k, p);
        }
    }
    let inter = anova_decompose(&prefix).interactions;

    Image::from_fn(n1, n2, |j, k| {
        coeffs.at(1, 1) + row[j - 1] + col[k - 1] + inter.at(j, k)
    })
}

fn extents(idx: AtomIndex, n1: usize, n2: usize) -> (f64, f64) {
    ((n1 - idx.j + 1) as f64, (n2 - idx.k + 1) as f64)
}

fn uncentered_inner(a: AtomIndex, b: AtomIndex, n1: usize, n2: usize) -> f64 {
    let x1 = (n1 - a.j.max(b.j) + 1) as f64;
    let x2 = (n2 - a.k.max(b.k) + 1) as f64;
    x1 * x2
}

fn centered_inner(a: AtomIndex, b: AtomIndex, n1: usize, n2: usize) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let (a1, a2) = extents(a, n1, n2);
    let (b1, b2) = extents(b, n1, n2);
    match ((a.j >= 2, a.k >= 2), (b.j >= 2, b.k >= 2)) {
        // Atoms from different ANOVA blocks are orthogonal.
        (x, y) if x != y => 0.0,
        ((false, false), _) => f1 * f2,
        ((true, false), _) => f2 * (a1.min(b1) - a1 * b1 / f1),
        ((false, true), _) => f1 * (a2.min(b2) - a2 * b2 / f2),
        ((true, true), _) => {
            a1.min(b1) * a2.min(b2) - a2 * b2 * a1.min(b1) / f2 - a1 * b1 * a2.min(b2) / f1
                + a1 * a2 * b1 * b2 / (f1 * f2)
        }
    }
}

/// Inner product of two atoms (plain or centered) in `O(1)`, computed
/// from overlap-rectangle arithmetic and marginal corrections.
pub fn atom_inner_product(
    a: AtomIndex,
    b: AtomIndex,
    centered: bool,
    n1: usize,
    n2: usize,
) -> Result<f64> {
    let a = a.check(n1, n2)?;
    let b = b.check(n1, n2)?;
    Ok(if centered {
        centered_inner(a, b, n1, n2)
    } else {
        uncentered_inner(a, b, n1, n2)
    })
}

/// Squared norm of a centered interaction atom,
/// `a1*a2*(1 - a1/n1)*(1 - a2/n2)`; strictly positive on the interaction
/// block.
pub fn centered_interaction_norm_sq(idx: AtomIndex, n1: usize, n2: usize) -> f64 {
    let (a1, a2) = extents(idx, n1, n2);
    a1 * a2 * (1.0 - a1 / n1 as f64) * (1.0 - a2 / n2 as f64)
}

/// Suffix-sum table `T(j,k) = sum_{r>=j, c>=k} f(r,c)`.
///
/// For a doubly centered `f` this evaluates every
/// `<psitilde^{j,k}, f>` on the interaction block at once, since the
/// centering corrections vanish against `f`.
pub fn suffix_sums(f: &Image) -> Image {
    let (n1, n2) = f.dims();
    let mut t = Image::zeros(n1, n2);
    for j in (1..=n1).rev() {
        for k in (1..=n2).rev() {
            let right = if k < n2 { t.at(j, k + 1) } else { 0.0 };
            let below = if j < n1 { t.at(j + 1, k) } else { 0.0 };
            let diag = if j < n1 && k < n2 { t.at(j + 1, k + 1) } else { 0.0 };
            t.set(j, k, f.at(j, k) + right + below - diag);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{interaction_part, total_derivative};
    use crate::tolerances::EXACT_IDENTITY;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corner_atoms() {
        let ones = atom(AtomIndex::new(1, 1), 3, 4).unwrap();
        assert_eq!(ones.as_slice().iter().sum::<f64>(), 12.0);
        let corner = atom(AtomIndex::new(3, 4), 3, 4).unwrap();
        assert_eq!(corner.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(corner.at(3, 4), 1.0);
        assert!(atom(AtomIndex::new(4, 1), 3, 4).is_err());
    }

    #[test]
    fn atom_2_3_on_4x4_has_six_ones() {
        let a = atom(AtomIndex::new(2, 3), 4, 4).unwrap();
        assert_eq!(a.as_slice().iter().sum::<f64>(), 6.0);
        for j in 2..=4 {
            for k in 3..=4 {
                assert_eq!(a.at(j, k), 1.0);
            }
        }
    }

    #[test]
    fn centered_atom_2x2_matches_hand_computation() {
        let a = centered_atom(AtomIndex::new(2, 2), 2, 2).unwrap();
        let expect = [[0.25, -0.25], [-0.25, 0.25]];
        for j in 1..=2 {
            for k in 1..=2 {
                assert!((a.at(j, k) - expect[j - 1][k - 1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn centered_atoms_match_anova_projection() {
        // The closed-form marginals must agree with decomposing the raw
        // atom, for every index on a small grid.
        for n1 in 2..=5 {
            for n2 in 2..=5 {
                for j in 1..=n1 {
                    for k in 1..=n2 {
                        let idx = AtomIndex::new(j, k);
                        let fast = centered_atom(idx, n1, n2).unwrap();
                        let raw = atom(idx, n1, n2).unwrap();
                        let parts = anova_decompose(&raw);
                        let dense = match (j >= 2, k >= 2) {
                            (true, true) => parts.interactions,
                            (true, false) => {
                                Image::from_fn(n1, n2, |r, _| parts.row_effects[r - 1])
                            }
                            (false, true) => {
                                Image::from_fn(n1, n2, |_, c| parts.col_effects[c - 1])
                            }
                            (false, false) => raw.clone(),
                        };
                        assert!(
                            fast.max_abs_diff(&dense) < 1e-13,
                            "mismatch at ({j},{k}) on {n1}x{n2}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn interaction_atoms_are_doubly_centered() {
        let a = centered_atom(AtomIndex::new(3, 5), 6, 7).unwrap();
        let (r, c) = crate::image::centering_defect(&a);
        assert!(r < 1e-12 && c < 1e-12);
    }

    #[test]
    fn constant_image_expands_to_single_coefficient() {
        let f = Image::constant(5, 6, 2.5);
        let c = expansion_coefficients(&f);
        assert!((c.at(1, 1) - 2.5).abs() < 1e-15);
        for j in 1..=5 {
            for k in 1..=6 {
                if (j, k) != (1, 1) {
                    assert!(c.at(j, k).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn truth_8x8_interaction_block_has_four_nonzeros() {
        let f0 = crate::experiments::generate_truth(8, 8).unwrap();
        let c = expansion_coefficients(&f0);
        assert_eq!(c.interaction_support(1e-12), 4);
        let back = synthesize(&c);
        assert!(f0.max_abs_diff(&back) < EXACT_IDENTITY);
    }

    #[test]
    fn zero_coefficients_synthesize_to_zero() {
        assert_eq!(synthesize(&CoefficientField::zeros(4, 7)).max_abs(), 0.0);
    }

    #[test]
    fn single_interaction_coefficient_reproduces_centered_atom() {
        let mut c = CoefficientField::zeros(6, 6);
        c.set(3, 3, 1.0);
        let img = synthesize(&c);
        let a = centered_atom(AtomIndex::new(3, 3), 6, 6).unwrap();
        assert!(img.max_abs_diff(&a) < 1e-13);
    }

    proptest! {
        #[test]
        fn expansion_roundtrip(seed in 0u64..500, n1 in 2usize..9, n2 in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = Image::from_fn(n1, n2, |_, _| rng.random_range(-4.0..4.0));
            let back = synthesize(&expansion_coefficients(&f));
            prop_assert!(f.max_abs_diff(&back) < EXACT_IDENTITY);
        }

        #[test]
        fn synthesized_support_matches_coefficients(seed in 0u64..200) {
            // ||Delta of synthesized||_0 equals the interaction support.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n1, n2) = (rng.random_range(4..9), rng.random_range(4..9));
            let mut c = CoefficientField::zeros(n1, n2);
            let k_atoms = rng.random_range(0..5usize);
            for _ in 0..k_atoms {
                let j = rng.random_range(2..=n1);
                let k = rng.random_range(2..=n2);
                c.set(j, k, rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            }
            let img = synthesize(&c);
            let d = total_derivative(&img).unwrap();
            let support = c.interaction_support(0.0);
            prop_assert_eq!(d.support_size(1e-9), support);
            // Interaction block of the expansion recovers the planted
            // coefficients.
            let c2 = expansion_coefficients(&img);
            for j in 2..=n1 {
                for k in 2..=n2 {
                    prop_assert!((c.at(j, k) - c2.at(j, k)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_entries_match_dense_oracle() {
        // All pairs on a 6x7 grid, plain atoms.
        let (n1, n2) = (6, 7);
        let mut indices = Vec::new();
        for j in 1..=n1 {
            for k in 1..=n2 {
                indices.push(AtomIndex::new(j, k));
            }
        }
        for &a in &indices {
            for &b in &indices {
                let dense = atom(a, n1, n2).unwrap().dot(&atom(b, n1, n2).unwrap());
                let fast = atom_inner_product(a, b, false, n1, n2).unwrap();
                assert!((dense - fast).abs() < EXACT_IDENTITY);
                let expect =
                    ((n1 - a.j.max(b.j) + 1) * (n2 - a.k.max(b.k) + 1)) as f64;
                assert_eq!(fast, expect);
            }
        }
        assert_eq!(
            atom_inner_product(AtomIndex::new(1, 1), AtomIndex::new(1, 1), false, n1, n2)
                .unwrap(),
            (n1 * n2) as f64
        );
    }

    #[test]
    fn centered_gram_matches_dense_on_all_pairs() {
        for (n1, n2) in [(5usize, 5usize), (6, 6), (4, 6)] {
            let mut indices = Vec::new();
            for j in 1..=n1 {
                for k in 1..=n2 {
                    indices.push(AtomIndex::new(j, k));
                }
            }
            for &a in &indices {
                for &b in &indices {
                    let dense = centered_atom(a, n1, n2)
                        .unwrap()
                        .dot(&centered_atom(b, n1, n2).unwrap());
                    let fast = atom_inner_product(a, b, true, n1, n2).unwrap();
                    assert!(
                        (dense - fast).abs() < EXACT_IDENTITY,
                        "({:?},{:?}) dense {dense} fast {fast}",
                        a,
                        b
                    );
                }
            }
        }
    }

    #[test]
    fn cross_block_centered_atoms_are_orthogonal() {
        // Exhaustive on 6x6: atoms from different ANOVA blocks have zero
        // inner product.
        let n = 6;
        let block = |i: AtomIndex| match (i.j >= 2, i.k >= 2) {
            (false, false) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (true, true) => 3,
        };
        for j1 in 1..=n {
            for k1 in 1..=n {
                for j2 in 1..=n {
                    for k2 in 1..=n {
                        let a = AtomIndex::new(j1, k1);
                        let b = AtomIndex::new(j2, k2);
                        if block(a) != block(b) {
                            let v = atom_inner_product(a, b, true, n, n).unwrap();
                            assert_eq!(v, 0.0);
                            let dense = centered_atom(a, n, n)
                                .unwrap()
                                .dot(&centered_atom(b, n, n).unwrap());
                            assert!(dense.abs() < EXACT_IDENTITY);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interaction_atoms_span_the_interaction_subspace() {
        // Expanding the interaction part over the interaction atoms (with
        // total-derivative coefficients) recovers it exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (n1, n2) = (rng.random_range(3..8), rng.random_range(3..8));
            let f = Image::from_fn(n1, n2, |_, _| rng.random_range(-3.0..3.0));
            let ft = interaction_part(&f);
            let d = total_derivative(&ft).unwrap();
            let mut c = CoefficientField::zeros(n1, n2);
            for j in 2..=n1 {
                for k in 2..=n2 {
                    c.set(j, k, d.at(j, k));
                }
            }
            let back = synthesize(&c);
            assert!(ft.max_abs_diff(&back) < EXACT_IDENTITY);
        }
    }

    #[test]
    fn suffix_sums_evaluate_centered_correlations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n1, n2) = (7, 6);
        let f = interaction_part(&Image::from_fn(n1, n2, |_, _| rng.random_range(-2.0..2.0)));
        let t = suffix_sums(&f);
        for j in 2..=n1 {
            for k in 2..=n2 {
                let dense = centered_atom(AtomIndex::new(j, k), n1, n2).unwrap().dot(&f);
                assert!((t.at(j, k) - dense).abs() < EXACT_IDENTITY);
            }
        }
    }
}

use thiserror::Error;

/// Axis selector used in structured tessellation errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Rows => write!(f, "rows"),
            Axis::Cols => write!(f, "cols"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions {n1}x{n2} too small: the total derivative needs at least 2 rows and 2 columns")]
    DimensionTooSmall { n1: usize, n2: usize },

    #[error("dimension mismatch in {what}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("non-finite entry at (row {j}, col {k})")]
    NonFinite { j: usize, k: usize },

    #[error("index ({j},{k}) out of range for a {n1}x{n2} grid")]
    IndexOutOfRange {
        j: usize,
        k: usize,
        n1: usize,
        n2: usize,
    },

    #[error("invalid tuning parameter: {0}")]
    InvalidTuning(String),

    #[error("input is not doubly centered: max |row sum| = {max_row_sum:.3e}, max |col sum| = {max_col_sum:.3e}")]
    NotCentered { max_row_sum: f64, max_col_sum: f64 },

    #[error("grid {n1}x{n2} exceeds the dense-path size cap of {cap}x{cap}")]
    SizeCapExceeded { n1: usize, n2: usize, cap: usize },

    #[error("active set is empty: a tessellation needs at least one jump")]
    EmptyActiveSet,

    #[error("jump ({j},{k}) outside the admissible range [3:{}]x[3:{}]", n1 - 1, n2 - 1)]
    JumpOutOfRange {
        j: usize,
        k: usize,
        n1: usize,
        n2: usize,
    },

    #[error("duplicate jump location ({j},{k})")]
    DuplicateJump { j: usize, k: usize },

    #[error("no rectangular tessellation: jump coordinates {first} and {second} along {axis} admit no integer cut strictly between them")]
    UnsplittablePair {
        axis: Axis,
        first: usize,
        second: usize,
    },

    #[error("no rectangular tessellation: the active set is not a product grid (midpoint cell around ({row},{col}) contains no jump)")]
    NonProductActiveSet { row: usize, col: usize },

    #[error("mesh grid needs {n1}/{} and {n2}/{} to be integers; nearest valid sizes are {suggested_n1}x{suggested_n2}", t1 * t1 + 1, t2 * t2 + 1)]
    MeshDivisibility {
        n1: usize,
        n2: usize,
        t1: usize,
        t2: usize,
        suggested_n1: usize,
        suggested_n2: usize,
    },

    #[error("sizes must be multiples of 4, got {0}")]
    SizeNotMultipleOfFour(usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("sign configuration must assign +/-1 to every jump ({0} signs for {1} jumps)")]
    SignConfigMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;

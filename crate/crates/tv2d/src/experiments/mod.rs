//! Simulation harness: the piecewise-rectangular truth, the
//! mean-squared-error rate experiment and Monte-Carlo checks of the
//! oracle bounds.

mod simulation;
mod verify;

pub use simulation::{
    run_rate_simulation, LambdaRule, RepRecord, SimConfig, SimResult, SizeStats,
    REPORT_SCHEMA_VERSION,
};
pub use verify::{verify_oracle_bound, OracleTheorem, ViolationReport};

use crate::error::{Error, Result};
use crate::image::Image;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The centered square indicator truth: 1 on
/// `[n1/4+1 : 3n1/4] x [n2/4+1 : 3n2/4]`, 0 elsewhere.
pub fn generate_truth(n1: usize, n2: usize) -> Result<Image> {
    for n in [n1, n2] {
        if n == 0 || !n.is_multiple_of(4) {
            return Err(Error::SizeNotMultipleOfFour(n));
        }
    }
    Ok(Image::from_fn(n1, n2, |j, k| {
        let row_in = n1 / 4 < j && j <= 3 * n1 / 4;
        let col_in = n2 / 4 < k && k <= 3 * n2 / 4;
        if row_in && col_in {
            1.0
        } else {
            0.0
        }
    }))
}

/// Jump locations of the truth's total derivative (its active set).
pub fn truth_jumps(n1: usize, n2: usize) -> Vec<(usize, usize)> {
    let rows = [n1 / 4 + 1, 3 * n1 / 4 + 1];
    let cols = [n2 / 4 + 1, 3 * n2 / 4 + 1];
    let mut jumps = Vec::with_capacity(4);
    for r in rows {
        for c in cols {
            jumps.push((r, c));
        }
    }
    jumps
}

/// Independent substream for one `(size, rep)` cell of an experiment,
/// derived from the master seed by bit mixing; deterministic regardless
/// of scheduling.
pub fn substream(seed: u64, size: u64, rep: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    for word in [size.wrapping_add(1), rep.wrapping_add(1)] {
        state ^= word.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        state = state.rotate_left(27).wrapping_mul(0x94d0_49bb_1331_11eb);
    }
    ChaCha8Rng::seed_from_u64(state)
}

/// `f0 + sigma * noise` for one substream.
pub fn noisy_observation(f0: &Image, sigma: f64, rng: &mut ChaCha8Rng) -> Image {
    use rand::Rng;
    let (n1, n2) = f0.dims();
    Image::from_fn(n1, n2, |j, k| {
        f0.at(j, k) + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
    })
}

//! Counter-based Poisson sampling.
//!
//! Trials are grouped into fixed blocks. Block `b` draws its count from a
//! ChaCha stream keyed by `(seed, b)`, so the total is independent of how
//! blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Trials per block.
pub const BLOCK_TRIALS: u64 = 1 << 20;

/// Generator for block `block` under `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn poisson_draw(lambda: f64, rng: &mut ChaCha12Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    // rand_distr rejects λ above ~1.8e19; never reached at per-block scale
    let d = Poisson::new(lambda).expect("finite positive λ");
    d.sample(rng) as u64
}

/// Total Poisson count over `trials` independent trials of mean `mean_per_trial`.
pub fn poisson_total(mean_per_trial: f64, trials: u64, seed: u64) -> u64 {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut rng = block_rng(seed, b);
            poisson_draw(mean_per_trial * n as f64, &mut rng)
        })
        .sum()
}

/// Same as [`poisson_total`] evaluated serially, for layout-independence checks.
pub fn poisson_total_serial(mean_per_trial: f64, trials: u64, seed: u64) -> u64 {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks)
        .map(|b| {
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut rng = block_rng(seed, b);
            poisson_draw(mean_per_trial * n as f64, &mut rng)
        })
        .sum()
}

/// Derive an independent seed for a labelled sub-experiment.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // SplitMix64 finalizer
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

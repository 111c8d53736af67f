#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sirb_core::model::ModelParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(rng.random::<f64>())
}

/// A broad admissible parameter set.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut r = |lo, hi| log_uniform(rng, lo, hi);
    ModelParams {
        b0: r(0.1, 5.0),
        k1: r(0.5, 20.0),
        beta1: r(0.01, 5.0),
        beta2: r(0.01, 5.0),
        k2: r(0.1, 10.0),
        g0: r(0.1, 5.0),
        k3: r(0.5, 20.0),
        d1: r(0.01, 3.0),
        d2: r(0.01, 3.0),
        d3: r(0.01, 3.0),
        d4: r(0.01, 3.0),
        sigma: r(0.01, 3.0),
        gamma: r(0.01, 3.0),
        xi: r(0.01, 5.0),
    }
}

pub fn base() -> ModelParams {
    ModelParams {
        b0: 2.0,
        k1: 10.0,
        beta1: 1.0,
        beta2: 2.0,
        k2: 1.0,
        g0: 3.0,
        k3: 6.0,
        d1: 1.0,
        d2: 0.5,
        d3: 0.4,
        d4: 1.0,
        sigma: 0.5,
        gamma: 0.5,
        xi: 0.3,
    }
}

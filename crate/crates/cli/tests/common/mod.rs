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

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

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

/// A parameter point whose endemic state is stable to uniform perturbations
/// but loses stability to a band of spatial modes.
pub fn turing_point() -> (ModelParams, [f64; 4], f64) {
    let p = ModelParams {
        b0: 4.727557709021826,
        k1: 4.763476487963745,
        beta1: 0.06458627390061256,
        beta2: 8.003110552699546,
        k2: 0.9889281463955116,
        g0: 0.12535497222464667,
        k3: 11.426642593406973,
        d1: 2.075808903697054,
        d2: 0.19318707810365235,
        d3: 0.10775632406042583,
        d4: 0.4699334788336756,
        sigma: 0.1194419392124028,
        gamma: 0.03699228633156277,
        xi: 5.276336898535614,
    };
    let a = [0.003908139726295949, 0.09169956019971247, 1350.0027475360685, 0.0024024944150430098];
    (p, a, 86.0)
}

/// Scenario JSON with the given parameters and constant diffusion.
pub fn scenario_json(p: &ModelParams, a: [f64; 4], length: f64, cells: usize) -> String {
    let d: Vec<String> = a.iter().map(|v| format!("{{\"constant\": {v:?}}}")).collect();
    format!(
        r#"{{
  "name": "generated",
  "params": {params},
  "grid": {{"lengths": [{length:?}], "cells": [{cells}]}},
  "diffusion": [{diff}],
  "initial": {{"kind": "constant", "value": [1.0, 1.0, 1.0, 1.0]}},
  "run": {{"t_end": 1.0, "step": {{"policy": "adaptive", "dt_max": 0.1}}}}
}}"#,
        params = serde_json::to_string(p).unwrap(),
        diff = d.join(", "),
    )
}

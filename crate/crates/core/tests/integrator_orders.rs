mod common;

use std::f64::consts::PI;

use common::{base, log_uniform, random_params, rng};
use proptest::prelude::*;
use sirb_core::grid::{apply_diffusion, CoefficientField, CoefficientSpec, Grid, ScalarField};
use sirb_core::integrator::{simulate, InitialCondition, SimConfig, StepControl};
use sirb_core::model::{reaction_rhs, ModelParams};

fn observed_order(errors: &[f64]) -> f64 {
    let n = errors.len();
    (errors[n - 2] / errors[n - 1]).log2()
}

fn max_error(grid: &Grid, a: &CoefficientField, u: impl Fn(f64) -> f64, exact: impl Fn(f64) -> f64) -> f64 {
    let field = ScalarField::from_fn(*grid, |c| u(c[0]));
    let lu = apply_diffusion(&field, a, 0.0).unwrap();
    (0..grid.len())
        .map(|i| (lu.values()[i] - exact(grid.center(i)[0])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_coefficient_laplacian_is_second_order() {
    let l = 3.0;
    let k = 2.0 * PI / l;
    let a = CoefficientField::constant(0.7).unwrap();
    let errors: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let g = Grid::new_1d(l, n).unwrap();
            max_error(&g, &a, |x| (k * x).cos(), |x| -0.7 * k * k * (k * x).cos())
        })
        .collect();
    let order = observed_order(&errors);
    assert!((order - 2.0).abs() <= 0.2, "order {order}, errors {errors:?}");
}

#[test]
fn variable_coefficient_operator_is_second_order() {
    let l = 2.0;
    let w = PI / l;
    let k = 2.0 * PI / l;
    let (m, eps) = (0.5, 0.6);
    let spec = CoefficientSpec::Cosine { mean: m, amplitude: eps, axis: 0 };
    let a = CoefficientField::profile(spec).unwrap();
    // d/dx (a u') with a = m (1 + eps cos(w x)) and u = cos(k x).
    let exact = |x: f64| {
        let av = m * (1.0 + eps * (w * x).cos());
        let da = -m * eps * w * (w * x).sin();
        da * (-k * (k * x).sin()) + av * (-k * k * (k * x).cos())
    };
    let errors: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| max_error(&Grid::new_1d(l, n).unwrap(), &a, |x| (k * x).cos(), exact))
        .collect();
    let order = observed_order(&errors);
    assert!((order - 2.0).abs() <= 0.2, "order {order}, errors {errors:?}");
}

#[test]
fn two_dimensional_laplacian_is_second_order() {
    let (lx, ly) = (2.0, 1.0);
    let (kx, ky) = (PI / lx, 2.0 * PI / ly);
    let a = CoefficientField::constant(1.0).unwrap();
    let errors: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let g = Grid::new_2d(lx, ly, n, n).unwrap();
            let u = ScalarField::from_fn(g, |c| (kx * c[0]).cos() * (ky * c[1]).cos());
            let lu = apply_diffusion(&u, &a, 0.0).unwrap();
            (0..g.len())
                .map(|i| {
                    let c = g.center(i);
                    let want = -(kx * kx + ky * ky) * (kx * c[0]).cos() * (ky * c[1]).cos();
                    (lu.values()[i] - want).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let order = observed_order(&errors);
    assert!((order - 2.0).abs() <= 0.2, "order {order}, errors {errors:?}");
}

fn rk4(u0: [f64; 4], p: &ModelParams, t_end: f64, dt: f64) -> [f64; 4] {
    let f = |u: [f64; 4]| reaction_rhs(u, p).unwrap().to_array();
    let add = |u: [f64; 4], k: [f64; 4], s: f64| std::array::from_fn(|i| u[i] + s * k[i]);
    let steps = (t_end / dt).round() as usize;
    let mut u = u0;
    for _ in 0..steps {
        let k1 = f(u);
        let k2 = f(add(u, k1, dt / 2.0));
        let k3 = f(add(u, k2, dt / 2.0));
        let k4 = f(add(u, k3, dt));
        u = std::array::from_fn(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    u
}

fn imex_constant(u0: [f64; 4], p: &ModelParams, t_end: f64, dt: f64) -> [f64; 4] {
    let g = Grid::new_1d(1.0, 4).unwrap();
    let mut cfg = SimConfig::new(g, *p, [0.1, 0.2, 0.3, 0.4], InitialCondition::Constant { value: u0 }, t_end, dt).unwrap();
    cfg.record_every = usize::MAX;
    let traj = simulate(&cfg).unwrap();
    assert!((traj.final_state.t() - t_end).abs() < 1e-12);
    traj.final_state.cell(2)
}

fn rel_error(a: [f64; 4], b: [f64; 4]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn uniform_states_follow_the_reaction_ode_at_first_order() {
    let p = base();
    let u0 = [3.0, 0.5, 0.2, 1.0];
    let t_end = 2.0;
    let reference = rk4(u0, &p, t_end, 1e-4);
    let errors: Vec<f64> = [0.02, 0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| rel_error(imex_constant(u0, &p, t_end, dt), reference))
        .collect();
    let order = observed_order(&errors);
    assert!((order - 1.0).abs() <= 0.2, "order {order}, errors {errors:?}");
}

#[test]
fn uniform_states_match_the_ode_oracle_closely() {
    let p = base();
    let u0 = [3.0, 0.5, 0.2, 1.0];
    let reference = rk4(u0, &p, 1.0, 1e-4);
    let err = rel_error(imex_constant(u0, &p, 1.0, 2e-5), reference);
    assert!(err <= 1e-4, "relative error {err:e}");
}

#[test]
fn random_scenarios_stay_nonnegative() {
    let mut rng = rng(5);
    for k in 0..8u64 {
        let p = random_params(&mut rng);
        let a: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng, 1e-3, 1.0));
        let high: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng, 0.1, 10.0));
        let g = Grid::new_1d(4.0, 32).unwrap();
        let init = InitialCondition::Random { low: [0.0; 4], high, seed: k };
        let mut cfg = SimConfig::new(g, p, a, init, 2.0, 0.1).unwrap();
        cfg.step = StepControl::Adaptive { dt_max: 0.1 };
        let traj = simulate(&cfg).unwrap();
        for s in &traj.samples {
            for i in 0..4 {
                assert!(s.min[i] >= -1e-12 * s.sup[i], "scenario {k}: {s:?}");
            }
        }
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let g = Grid::new_2d(1.0, 1.0, 12, 12).unwrap();
    let init = InitialCondition::Random { low: [0.0; 4], high: [2.0; 4], seed: 3 };
    let mut cfg = SimConfig::new(g, base(), [0.05, 0.1, 0.2, 0.3], init, 1.0, 0.05).unwrap();
    cfg.step = StepControl::Adaptive { dt_max: 0.05 };
    cfg.record_modes = vec![0, 1, 2];
    let run = || {
        let t = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        t.final_state.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pure_diffusion_conserves_mass(
        a in prop::array::uniform4(1e-3f64..2.0),
        seed in 0u64..1000,
        dt in 0.01f64..1.0,
    ) {
        // Rates at the bottom of the admissible range leave pure diffusion.
        let tiny = 1e-300;
        let p = ModelParams {
            b0: tiny, k1: 1.0, beta1: tiny, beta2: tiny, k2: 1.0, g0: tiny, k3: 1.0,
            d1: 0.0, d2: 0.0, d3: 0.0, d4: 0.0, sigma: tiny, gamma: tiny, xi: tiny,
        };
        let g = Grid::new_1d(2.0, 24).unwrap();
        let init = InitialCondition::Random { low: [0.0; 4], high: [1.0; 4], seed };
        let cfg = SimConfig::new(g, p, a, init, 5.0 * dt, dt).unwrap();
        let traj = simulate(&cfg).unwrap();
        let m0 = traj.samples[0].mass;
        for s in &traj.samples {
            prop_assert!((s.mass - m0).abs() <= 1e-10 * m0);
        }
    }
}

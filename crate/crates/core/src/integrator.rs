//! IMEX Euler time stepping: implicit diffusion, explicit reaction.
//!
//! Each step solves `(I - dt D_i) u_i' = u_i + dt f_i(u)` per species with
//! matrix-free conjugate gradients. `D_i` is the flux-form Neumann diffusion
//! operator with coefficients frozen at the start of the step.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, neumann_modes, write_fields_csv, CoefficientField, Grid, ModeSpectrum, ScalarField};
use crate::model::{check_regime, raw, ModelParams, Regime, SPECIES, SPECIES_NAMES};
use crate::steady_state::{select_state, StateSelector};

/// Negative values down to `-POSITIVITY_REL_TOL * sup|u_i|` are accepted as
/// rounding.
pub const POSITIVITY_REL_TOL: f64 = 1e-12;
/// Relative slack on the per-sample mass decrease check.
pub const MASS_REL_TOL: f64 = 1e-10;
/// Fraction of the reaction stability bound used by adaptive stepping.
pub const DT_SAFETY: f64 = 0.5;

/// The four species fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    species: [ScalarField; SPECIES],
    t: f64,
}

impl StateField {
    pub fn new(species: [ScalarField; SPECIES], t: f64) -> Result<StateField> {
        let grid = *species[0].grid();
        for f in &species[1..] {
            if *f.grid() != grid {
                return Err(Error::GridMismatch {
                    expected: grid.len(),
                    found: f.grid().len(),
                });
            }
        }
        Ok(StateField { species, t })
    }

    pub fn constant(grid: Grid, u: [f64; SPECIES], t: f64) -> StateField {
        StateField {
            species: u.map(|v| ScalarField::constant(grid, v)),
            t,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.species[0].grid()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn species(&self, i: usize) -> &ScalarField {
        &self.species[i]
    }

    pub fn fields(&self) -> &[ScalarField; SPECIES] {
        &self.species
    }

    /// `(S, I, R, B)` at one cell.
    pub fn cell(&self, idx: usize) -> [f64; SPECIES] {
        std::array::from_fn(|i| self.species[i].values()[idx])
    }

    pub fn sup_norms(&self) -> [f64; SPECIES] {
        std::array::from_fn(|i| self.species[i].sup_norm())
    }

    pub fn l1_norms(&self) -> [f64; SPECIES] {
        std::array::from_fn(|i| self.species[i].l1_norm())
    }

    pub fn minima(&self) -> [f64; SPECIES] {
        std::array::from_fn(|i| self.species[i].min())
    }

    /// `integral (S + I + R) dx`.
    pub fn mass(&self) -> f64 {
        self.species[..3].iter().map(|f| f.integral()).sum()
    }

    /// Largest `|u_i(x) - reference_i|` over cells and species.
    pub fn deviation_from(&self, reference: [f64; SPECIES]) -> f64 {
        let mut worst = 0.0_f64;
        for (f, r) in self.species.iter().zip(reference) {
            for v in f.values() {
                worst = worst.max((v - r).abs());
            }
        }
        worst
    }

    /// Errors on the first non-finite value or value below
    /// `-POSITIVITY_REL_TOL * sup|u_i|`.
    pub fn check_positivity(&self) -> Result<()> {
        for (i, f) in self.species.iter().enumerate() {
            let tol = POSITIVITY_REL_TOL * f.sup_norm();
            for (cell, &v) in f.values().iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteState {
                        species: SPECIES_NAMES[i],
                        cell,
                    });
                }
                if v < -tol {
                    return Err(Error::Positivity {
                        species: SPECIES_NAMES[i],
                        cell,
                        value: v,
                        tolerance: -tol,
                    });
                }
            }
        }
        Ok(())
    }

    /// One CSV row per cell with columns `x[,y],S,I,R,B`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let cols: Vec<(&str, &[f64])> = SPECIES_NAMES
            .iter()
            .zip(&self.species)
            .map(|(n, f)| (*n, f.values()))
            .collect();
        write_fields_csv(self.grid(), &cols, w)
    }
}

/// Named initial profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: [f64; SPECIES],
    },
    /// `background + amplitude * exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump {
        background: [f64; SPECIES],
        amplitude: [f64; SPECIES],
        center: [f64; 2],
        width: f64,
    },
    /// `base + epsilon * weights * phi_mode(x)` with `phi_mode` the
    /// L2-normalized Neumann eigenfunction.
    ModePerturbation {
        base: [f64; SPECIES],
        epsilon: f64,
        mode: usize,
        #[serde(default = "unit_weights")]
        weights: [f64; SPECIES],
    },
    /// A named equilibrium plus `epsilon * weights * phi_mode(x)`.
    SteadyPerturbation {
        state: StateSelector,
        epsilon: f64,
        mode: usize,
        #[serde(default = "unit_weights")]
        weights: [f64; SPECIES],
    },
    /// Independent uniform values in `[low, high]` per cell and species.
    Random {
        low: [f64; SPECIES],
        high: [f64; SPECIES],
        seed: u64,
    },
    /// Explicit per-cell values in grid storage order.
    Cells {
        values: [Vec<f64>; SPECIES],
    },
}

fn unit_weights() -> [f64; SPECIES] {
    [1.0; SPECIES]
}

impl InitialCondition {
    /// The constant state a perturbation is measured against, if any.
    pub fn reference(&self, p: &ModelParams) -> Result<Option<[f64; SPECIES]>> {
        Ok(match self {
            InitialCondition::Constant { value } => Some(*value),
            InitialCondition::ModePerturbation { base, .. } => Some(*base),
            InitialCondition::SteadyPerturbation { state, .. } => Some(select_state(p, *state)?.value),
            _ => None,
        })
    }

    /// Builds the state at `t = 0`. Parameters are only consulted to locate
    /// a named equilibrium.
    pub fn build(&self, grid: &Grid, p: &ModelParams) -> Result<StateField> {
        if let InitialCondition::SteadyPerturbation {
            state,
            epsilon,
            mode,
            weights,
        } = self
        {
            let base = select_state(p, *state)?.value;
            return InitialCondition::ModePerturbation {
                base,
                epsilon: *epsilon,
                mode: *mode,
                weights: *weights,
            }
            .build(grid, p);
        }
        let grid = *grid;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let fields: [ScalarField; SPECIES] = match self {
            InitialCondition::SteadyPerturbation { .. } => unreachable!("handled above"),
            InitialCondition::Constant { value } => value.map(|v| ScalarField::constant(grid, v)),
            InitialCondition::GaussianBump {
                background,
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return bad(format!("gaussian width must be positive, got {width}"));
                }
                let dim = grid.dim();
                std::array::from_fn(|i| {
                    ScalarField::from_fn(grid, |x| {
                        let r2: f64 = (0..dim).map(|k| (x[k] - center[k]).powi(2)).sum();
                        background[i] + amplitude[i] * (-r2 / (2.0 * width * width)).exp()
                    })
                })
            }
            InitialCondition::ModePerturbation {
                base,
                epsilon,
                mode,
                weights,
            } => {
                if !(*epsilon >= 0.0) {
                    return bad(format!("perturbation amplitude must be nonnegative, got {epsilon}"));
                }
                let spectrum = neumann_modes(&grid, mode + 1)?;
                let phi = crate::grid::eigenfunction(&grid, spectrum.modes()[*mode].wave)?;
                std::array::from_fn(|i| {
                    let values = phi.iter().map(|v| base[i] + epsilon * weights[i] * v).collect();
                    ScalarField::new(grid, values).expect("length matches grid")
                })
            }
            InitialCondition::Random { low, high, seed } => {
                for i in 0..SPECIES {
                    if !(low[i] <= high[i]) {
                        return bad(format!("random range for {} is empty", SPECIES_NAMES[i]));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                std::array::from_fn(|i| {
                    let values = (0..grid.len()).map(|_| rng.random_range(low[i]..=high[i])).collect();
                    ScalarField::new(grid, values).expect("length matches grid")
                })
            }
            InitialCondition::Cells { values } => {
                let mut out = Vec::with_capacity(SPECIES);
                for v in values {
                    out.push(ScalarField::new(grid, v.clone())?);
                }
                out.try_into().expect("four species")
            }
        };
        let state = StateField { species: fields, t: 0.0 };
        for (i, f) in state.species.iter().enumerate() {
            if let Some((cell, v)) = f.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return bad(format!(
                    "initial {} is negative or not finite ({v}) at cell {cell}",
                    SPECIES_NAMES[i]
                ));
            }
        }
        Ok(state)
    }
}

/// Time step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepControl {
    /// Constant `dt`; no stability pre-check, so an oversized step shows up as
    /// a positivity failure.
    Fixed { dt: f64 },
    /// `dt = min(dt_max, 0.5 / L(u))`, halved further on positivity failure.
    Adaptive { dt_max: f64 },
}

/// Optional per-cell replacements for the growth rates `b0` and `g0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverrides {
    #[serde(default)]
    pub b0: Option<CoefficientField>,
    #[serde(default)]
    pub g0: Option<CoefficientField>,
}

impl RateOverrides {
    fn is_empty(&self) -> bool {
        self.b0.is_none() && self.g0.is_none()
    }
}

fn default_record_every() -> usize {
    1
}

fn default_cg_tol() -> f64 {
    CG_REL_TOL
}

/// Relative residual target of the implicit solve.
pub const CG_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: Grid,
    pub params: ModelParams,
    /// Diffusion coefficients `a1..a4`.
    pub diffusion: [CoefficientField; SPECIES],
    #[serde(default, skip_serializing_if = "RateOverrides::is_empty")]
    pub rates: RateOverrides,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub step: StepControl,
    /// Steps between trajectory samples; the first and last states are always
    /// sampled.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Mode indices whose projected amplitudes are recorded.
    #[serde(default)]
    pub record_modes: Vec<usize>,
    /// Times at which full states are stored. Steps are shortened to hit them.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_cg_tol")]
    pub cg_tolerance: f64,
}

impl SimConfig {
    /// Convenience constructor with constant diffusion, fixed `dt`, sampling
    /// every step and nothing else recorded.
    pub fn new(
        grid: Grid,
        params: ModelParams,
        diffusion: [f64; SPECIES],
        initial: InitialCondition,
        t_end: f64,
        dt: f64,
    ) -> Result<SimConfig> {
        let mut coeffs = Vec::with_capacity(SPECIES);
        for a in diffusion {
            coeffs.push(CoefficientField::constant(a)?);
        }
        let cfg = SimConfig {
            grid,
            params,
            diffusion: coeffs.try_into().expect("four species"),
            rates: RateOverrides::default(),
            initial,
            t_end,
            step: StepControl::Fixed { dt },
            record_every: 1,
            record_modes: Vec::new(),
            snapshot_times: Vec::new(),
            cg_tolerance: CG_REL_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.params.validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive and finite, got {}", self.t_end));
        }
        match self.step {
            StepControl::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("dt must be positive and finite, got {dt}"));
            }
            StepControl::Adaptive { dt_max } if !(dt_max > 0.0 && dt_max.is_finite()) => {
                return bad(format!("dt_max must be positive and finite, got {dt_max}"));
            }
            _ => {}
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.cg_tolerance > 0.0 && self.cg_tolerance < 1.0) {
            return bad(format!("cg_tolerance must lie in (0, 1), got {}", self.cg_tolerance));
        }
        for t in &self.snapshot_times {
            if !(*t >= 0.0 && *t <= self.t_end) {
                return bad(format!("snapshot time {t} outside [0, t_end]"));
            }
        }
        for a in &self.diffusion {
            a.sample(&self.grid, 0.0)?;
        }
        for r in [&self.rates.b0, &self.rates.g0].into_iter().flatten() {
            r.sample(&self.grid, 0.0)?;
        }
        if let Some(&j) = self.record_modes.iter().max() {
            neumann_modes(&self.grid, j + 1)?.project(&ScalarField::constant(self.grid, 0.0), j)?;
        }
        self.initial.build(&self.grid, &self.params)?;
        Ok(())
    }

    /// Whether the damping regime holds everywhere: `d1 > b0` and `d4 > g0`
    /// with local rates at their maxima.
    pub fn mass_decay_expected(&self) -> bool {
        let p = &self.params;
        let b0 = self.rates.b0.as_ref().map_or(p.b0, |f| f.upper_bound());
        let g0 = self.rates.g0.as_ref().map_or(p.g0, |f| f.upper_bound());
        check_regime(&p.with_local_rates(b0, g0), Regime::Cor21).all_satisfied()
    }
}

/// Upper bound on the Lipschitz constant (max row sum of `|df/du|`) of the
/// reaction terms over the box `0 <= u <= max`, for rates `b0`, `g0`.
pub fn reaction_lipschitz(max: [f64; SPECIES], p: &ModelParams) -> f64 {
    let [s, i, _, b] = max;
    let row1 = p.b0 * (2.0 * s / p.k1 - 1.0).max(1.0)
        + p.beta1 * i
        + p.beta2
        + p.d1
        + p.beta1 * s
        + p.sigma
        + p.beta2 * s / p.k2;
    let row2 = p.beta1 * i + p.beta2 + p.beta1 * s + p.d2 + p.gamma + p.beta2 * s / p.k2;
    let row3 = p.gamma + p.d3 + p.sigma;
    let row4 = p.xi + p.g0 * (2.0 * b / p.k3 - 1.0).max(1.0) + p.d4;
    row1.max(row2).max(row3).max(row4)
}

/// Matrix-free `(I - dt D) x = rhs` solver state for one grid.
struct Implicit {
    grid: Grid,
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl Implicit {
    fn new(grid: Grid) -> Implicit {
        let n = grid.len();
        Implicit {
            grid,
            r: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        }
    }

    fn apply(grid: &Grid, a: &[f64], dt: f64, x: &[f64], out: &mut [f64]) {
        grid.diffuse(x, a, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - dt * *o;
        }
    }

    /// Conjugate gradients from `x = rhs`. Every residual sums to zero, so
    /// the solve conserves `sum x` up to rounding.
    fn solve(&mut self, a: &[f64], dt: f64, rhs: &[f64], x: &mut Vec<f64>, tol: f64) -> Result<usize> {
        let n = rhs.len();
        x.clear();
        x.extend_from_slice(rhs);
        let bnorm = dot(rhs, rhs).sqrt();
        if bnorm == 0.0 {
            return Ok(0);
        }
        Self::apply(&self.grid, a, dt, x, &mut self.ap);
        for k in 0..n {
            self.r[k] = rhs[k] - self.ap[k];
        }
        self.p.copy_from_slice(&self.r);
        let mut rr = dot(&self.r, &self.r);
        let max_iter = 10 * n;
        for it in 0..=max_iter {
            if rr.sqrt() <= tol * bnorm {
                return Ok(it);
            }
            if it == max_iter {
                break;
            }
            Self::apply(&self.grid, a, dt, &self.p, &mut self.ap);
            let alpha = rr / dot(&self.p, &self.ap);
            for k in 0..n {
                x[k] += alpha * self.p[k];
                self.r[k] -= alpha * self.ap[k];
            }
            let rr_new = dot(&self.r, &self.r);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                self.p[k] = self.r[k] + beta * self.p[k];
            }
        }
        Err(Error::CgNonConvergence {
            iterations: max_iter,
            residual: rr.sqrt() / bnorm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-step machinery: coefficient caches and solver scratch.
struct Stepper<'a> {
    cfg: &'a SimConfig,
    solver: Implicit,
    coeffs: [Option<Vec<f64>>; SPECIES],
    b0: Option<Vec<f64>>,
    g0: Option<Vec<f64>>,
    max_b0: f64,
    max_g0: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Stepper<'a>> {
        let grid = cfg.grid;
        let mut coeffs: [Option<Vec<f64>>; SPECIES] = Default::default();
        for (slot, a) in coeffs.iter_mut().zip(&cfg.diffusion) {
            if !a.is_time_dependent() {
                *slot = Some(a.sample(&grid, 0.0)?);
            }
        }
        let local = |f: &Option<CoefficientField>| -> Result<Option<Vec<f64>>> {
            f.as_ref().map(|f| f.sample(&grid, 0.0)).transpose()
        };
        let b0 = local(&cfg.rates.b0)?;
        let g0 = local(&cfg.rates.g0)?;
        let max_of = |v: &Option<Vec<f64>>, dflt: f64| v.as_ref().map_or(dflt, |v| v.iter().cloned().fold(0.0, f64::max));
        let max_b0 = max_of(&b0, cfg.params.b0);
        let max_g0 = max_of(&g0, cfg.params.g0);
        Ok(Stepper {
            cfg,
            solver: Implicit::new(grid),
            coeffs,
            b0,
            g0,
            max_b0,
            max_g0,
        })
    }

    fn params_at(&self, cell: usize) -> ModelParams {
        let p = &self.cfg.params;
        match (&self.b0, &self.g0) {
            (None, None) => *p,
            (b, g) => p.with_local_rates(
                b.as_ref().map_or(p.b0, |v| v[cell]),
                g.as_ref().map_or(p.g0, |v| v[cell]),
            ),
        }
    }

    /// Largest `dt` keeping the explicit reaction update within its bound.
    fn dt_bound(&self, state: &StateField) -> f64 {
        let p = self.cfg.params.with_local_rates(self.max_b0, self.max_g0);
        let l = reaction_lipschitz(state.sup_norms(), &p);
        DT_SAFETY / l
    }

    fn coefficients(&self, i: usize, t: f64) -> Result<std::borrow::Cow<'_, [f64]>> {
        Ok(match &self.coeffs[i] {
            Some(v) => std::borrow::Cow::Borrowed(v.as_slice()),
            None => std::borrow::Cow::Owned(self.cfg.diffusion[i].sample(&self.cfg.grid, t)?),
        })
    }

    fn reaction(&self, state: &StateField) -> [Vec<f64>; SPECIES] {
        let n = state.grid().len();
        let mut out: [Vec<f64>; SPECIES] = std::array::from_fn(|_| vec![0.0; n]);
        for c in 0..n {
            let f = raw::rhs(state.cell(c), &self.params_at(c)).to_array();
            for i in 0..SPECIES {
                out[i][c] = f[i];
            }
        }
        out
    }

    fn step(&mut self, state: &StateField, dt: f64) -> Result<StateField> {
        let f = self.reaction(state);
        let grid = *state.grid();
        let mut fields = Vec::with_capacity(SPECIES);
        for i in 0..SPECIES {
            let u = state.species[i].values();
            let rhs: Vec<f64> = u.iter().zip(&f[i]).map(|(u, f)| u + dt * f).collect();
            let a = self.coefficients(i, state.t)?.into_owned();
            let mut x = Vec::with_capacity(rhs.len());
            self.solver.solve(&a, dt, &rhs, &mut x, self.cfg.cg_tolerance)?;
            fields.push(ScalarField::new(grid, x)?);
        }
        let next = StateField {
            species: fields.try_into().expect("four species"),
            t: state.t + dt,
        };
        next.check_positivity()?;
        Ok(next)
    }

    /// `max_i sup |D_i u_i + f_i(u)|`.
    fn rate(&self, state: &StateField) -> Result<f64> {
        let f = self.reaction(state);
        let mut out = vec![0.0; state.grid().len()];
        let mut worst = 0.0_f64;
        for i in 0..SPECIES {
            let a = self.coefficients(i, state.t)?;
            state.grid().diffuse(state.species[i].values(), &a, &mut out);
            for (d, r) in out.iter().zip(&f[i]) {
                worst = worst.max((d + r).abs());
            }
        }
        Ok(worst)
    }

    /// Advances by at most `max_dt`; returns the new state and the step taken.
    fn advance(&mut self, state: &StateField, max_dt: f64) -> Result<(StateField, f64)> {
        match self.cfg.step {
            StepControl::Fixed { dt } => {
                let dt = dt.min(max_dt);
                Ok((self.step(state, dt)?, dt))
            }
            StepControl::Adaptive { dt_max } => {
                let mut dt = dt_max.min(self.dt_bound(state)).min(max_dt);
                for _ in 0..60 {
                    match self.step(state, dt) {
                        Ok(next) => return Ok((next, dt)),
                        Err(Error::Positivity { .. }) => dt *= 0.5,
                        Err(e) => return Err(e),
                    }
                }
                self.step(state, dt).map(|next| (next, dt))
            }
        }
    }
}

/// One IMEX Euler step of size `dt` from `state`.
pub fn step(state: &StateField, dt: f64, cfg: &SimConfig) -> Result<StateField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("dt must be positive and finite, got {dt}")));
    }
    if *state.grid() != cfg.grid {
        return Err(Error::GridMismatch {
            expected: cfg.grid.len(),
            found: state.grid().len(),
        });
    }
    state.check_positivity()?;
    Stepper::new(cfg)?.step(state, dt).map_err(|e| e.at(state.t))
}

/// Largest stable explicit-reaction step for `state` under `cfg`.
pub fn stable_dt(state: &StateField, cfg: &SimConfig) -> Result<f64> {
    Ok(Stepper::new(cfg)?.dt_bound(state))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub step: usize,
    pub sup: [f64; SPECIES],
    pub l1: [f64; SPECIES],
    pub min: [f64; SPECIES],
    /// `integral (S + I + R)`.
    pub mass: f64,
    /// Sup distance to the initial condition's reference state, if any.
    pub deviation: Option<f64>,
    /// Projected amplitudes per recorded mode, per species.
    pub modes: Vec<[f64; SPECIES]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Positivity,
    MassIncrease,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time: f64,
    pub step: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<StateField>,
    pub violations: Vec<Violation>,
    pub record_modes: Vec<usize>,
    pub mass_decay_expected: bool,
    pub steps: usize,
    pub final_state: StateField,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Diagnostics CSV, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string(), "step".to_string()];
        for stat in ["sup", "l1", "min"] {
            header.extend(SPECIES_NAMES.iter().map(|n| format!("{n}_{stat}")));
        }
        header.push("mass".into());
        header.push("deviation".into());
        for j in &self.record_modes {
            header.extend(SPECIES_NAMES.iter().map(|n| format!("{n}_mode{j}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![fmt_f64(s.t), s.step.to_string()];
            for v in s.sup.iter().chain(&s.l1).chain(&s.min) {
                row.push(fmt_f64(*v));
            }
            row.push(fmt_f64(s.mass));
            row.push(s.deviation.map(fmt_f64).unwrap_or_default());
            for m in &s.modes {
                row.extend(m.iter().map(|v| fmt_f64(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Recorder {
    spectrum: Option<ModeSpectrum>,
    modes: Vec<usize>,
    reference: Option<[f64; SPECIES]>,
}

impl Recorder {
    fn sample(&self, state: &StateField, step: usize) -> Result<Sample> {
        let modes = match &self.spectrum {
            Some(spec) => {
                let mut out = Vec::with_capacity(self.modes.len());
                for &j in &self.modes {
                    let mut amp = [0.0; SPECIES];
                    for (i, a) in amp.iter_mut().enumerate() {
                        *a = spec.project(&state.species[i], j)?;
                    }
                    out.push(amp);
                }
                out
            }
            None => Vec::new(),
        };
        Ok(Sample {
            t: state.t,
            step,
            sup: state.sup_norms(),
            l1: state.l1_norms(),
            min: state.minima(),
            mass: state.mass(),
            deviation: self.reference.map(|r| state.deviation_from(r)),
            modes,
        })
    }
}

/// Runs to `t_end`, returning what was recorded up to a failure together with
/// the failure itself (with the simulation time attached).
pub fn simulate_partial(cfg: &SimConfig) -> (Option<Trajectory>, Option<Error>) {
    match cfg.validate() {
        Ok(()) => {}
        Err(e) => return (None, Some(e)),
    }
    let init = match cfg.initial.build(&cfg.grid, &cfg.params) {
        Ok(s) => s,
        Err(e) => return (None, Some(e)),
    };
    let mut stepper = match Stepper::new(cfg) {
        Ok(s) => s,
        Err(e) => return (None, Some(e)),
    };
    let recorder = Recorder {
        spectrum: cfg
            .record_modes
            .iter()
            .max()
            .map(|j| neumann_modes(&cfg.grid, j + 1).expect("validated")),
        modes: cfg.record_modes.clone(),
        reference: match cfg.initial.reference(&cfg.params) {
            Ok(r) => r,
            Err(e) => return (None, Some(e)),
        },
    };
    let mass_decay_expected = cfg.mass_decay_expected();

    let mut snapshot_times = cfg.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();
    let mut next_snapshot = 0;

    let mut traj = Trajectory {
        samples: Vec::new(),
        snapshots: Vec::new(),
        violations: Vec::new(),
        record_modes: cfg.record_modes.clone(),
        mass_decay_expected,
        steps: 0,
        final_state: init.clone(),
    };
    let mut state = init;
    let mut error = None;
    let fail = |traj: &mut Trajectory, e: &Error, t: f64, step: usize| {
        let kind = match e {
            Error::Positivity { .. } => ViolationKind::Positivity,
            _ => ViolationKind::Numerical,
        };
        traj.violations.push(Violation {
            kind,
            time: t,
            step,
            detail: e.to_string(),
        });
    };

    let record = |traj: &mut Trajectory, state: &StateField, step: usize| -> Result<()> {
        let s = recorder.sample(state, step)?;
        if let Some(prev) = traj.samples.last() {
            let limit = prev.mass + MASS_REL_TOL * prev.mass.abs().max(f64::MIN_POSITIVE);
            let first = !traj.violations.iter().any(|v| v.kind == ViolationKind::MassIncrease);
            if mass_decay_expected && s.mass > limit && first {
                traj.violations.push(Violation {
                    kind: ViolationKind::MassIncrease,
                    time: s.t,
                    step,
                    detail: format!("mass rose from {} to {}", prev.mass, s.mass),
                });
            }
        }
        traj.samples.push(s);
        Ok(())
    };

    let take_snapshots = |traj: &mut Trajectory, state: &StateField, next: &mut usize| {
        while *next < snapshot_times.len() && snapshot_times[*next] <= state.t {
            traj.snapshots.push(state.clone());
            *next += 1;
        }
    };

    if let Err(e) = record(&mut traj, &state, 0) {
        return (Some(traj), Some(e));
    }
    take_snapshots(&mut traj, &state, &mut next_snapshot);

    let mut steps = 0usize;
    // Steps that would leave less than this before an event are stretched.
    let snap = 1e-12 * cfg.t_end;
    while cfg.t_end - state.t > snap {
        let mut target = cfg.t_end;
        if next_snapshot < snapshot_times.len() {
            target = target.min(snapshot_times[next_snapshot]);
        }
        let max_dt = target - state.t;
        match stepper.advance(&state, max_dt) {
            Ok((mut next, dt)) => {
                if (target - next.t).abs() <= snap || dt == max_dt {
                    next.t = target;
                }
                state = next;
            }
            Err(e) => {
                fail(&mut traj, &e, state.t, steps);
                error = Some(e.at(state.t));
                break;
            }
        }
        steps += 1;
        take_snapshots(&mut traj, &state, &mut next_snapshot);
        let done = cfg.t_end - state.t <= snap;
        if steps.is_multiple_of(cfg.record_every) || done {
            if let Err(e) = record(&mut traj, &state, steps) {
                error = Some(e.at(state.t));
                break;
            }
        }
    }
    if error.is_some() && traj.samples.last().map(|s| s.step) != Some(steps) {
        // Keep the last good state visible in the diagnostics.
        if let Ok(s) = recorder.sample(&state, steps) {
            traj.samples.push(s);
        }
    }
    traj.steps = steps;
    traj.final_state = state;
    (Some(traj), error)
}

/// Runs `cfg` to `t_end` and returns the recorded trajectory.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    match simulate_partial(cfg) {
        (Some(t), None) => Ok(t),
        (_, Some(e)) => Err(e),
        (None, None) => unreachable!("no trajectory without an error"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub state: StateField,
    pub converged: bool,
    /// `max_i sup |du_i/dt|` at the returned state.
    pub rate: f64,
    pub steps: usize,
}

/// Integrates until `max_i sup |du_i/dt| < tol` or `t_end`.
pub fn relax_to_steady(cfg: &SimConfig, tol: f64) -> Result<Relaxation> {
    cfg.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let mut stepper = Stepper::new(cfg)?;
    let mut state = cfg.initial.build(&cfg.grid, &cfg.params)?;
    let mut steps = 0;
    loop {
        let rate = stepper.rate(&state).map_err(|e| e.at(state.t))?;
        if rate < tol || cfg.t_end - state.t <= 1e-12 * cfg.t_end {
            return Ok(Relaxation {
                converged: rate < tol,
                state,
                rate,
                steps,
            });
        }
        let max_dt = cfg.t_end - state.t;
        let (next, _) = stepper.advance(&state, max_dt).map_err(|e| e.at(state.t))?;
        state = next;
        steps += 1;
    }
}

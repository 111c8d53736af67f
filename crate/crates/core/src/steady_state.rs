//! Constant equilibria of the reaction system.
//!
//! The trivial states are closed-form. Endemic states `(S, I, R, B)` with
//! `I > 0` satisfy three relations once `R = gamma I / (d3 + sigma)` is
//! eliminated:
//!
//! * a parabola in `(I, S)`: `(b0/k1) S^2 - (b0 - d1) S + kappa I = 0` with
//!   `kappa = d2 + gamma - sigma gamma / (d3 + sigma)`, whose two solution
//!   branches `S1(I) >= S2(I)` meet at `I = I*`;
//! * the bacterial balance `(g0/k3) B^2 - (g0 - d4) B - xi I = 0`, positive root;
//! * the infection balance `S = (d2 + gamma) I / (beta1 I + beta2 h1(B))`.
//!
//! Endemic states are found as sign changes of `S_branch(I) - S(I)` on
//! `(0, I*]`, refined by bisection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, raw, ModelParams, SPECIES};

/// Residual tolerance for a constant equilibrium, relative to `1 + max component`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Bisection stops once `|phi| < PHI_TOL * S1(0)`.
pub const PHI_TOL: f64 = 1e-12;
/// Endemic states closer than this (relative) are reported once.
pub const DUPLICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteadyTag {
    Z1,
    Z2,
    Z3,
    #[serde(rename = "Z4-S1")]
    Z4S1,
    #[serde(rename = "Z4-S2")]
    Z4S2,
    /// Endemic state found on both branches (they meet at `I = I*`).
    #[serde(rename = "Z4-S1S2")]
    Z4Both,
}

impl SteadyTag {
    pub fn is_endemic(self) -> bool {
        matches!(self, SteadyTag::Z4S1 | SteadyTag::Z4S2 | SteadyTag::Z4Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SteadyTag::Z1 => "Z1",
            SteadyTag::Z2 => "Z2",
            SteadyTag::Z3 => "Z3",
            SteadyTag::Z4S1 => "Z4-S1",
            SteadyTag::Z4S2 => "Z4-S2",
            SteadyTag::Z4Both => "Z4-S1S2",
        }
    }
}

impl fmt::Display for SteadyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verified constant equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub value: [f64; SPECIES],
    pub tag: SteadyTag,
    pub residual: f64,
}

impl SteadyState {
    /// Checks nonnegativity and the residual bound before accepting `value`.
    pub fn new(value: [f64; SPECIES], tag: SteadyTag, p: &ModelParams) -> Result<SteadyState> {
        let r = residual(value, p)?;
        let tol = RESIDUAL_TOL * (1.0 + value.iter().cloned().fold(0.0, f64::max));
        if !(r <= tol) {
            return Err(Error::Residual { residual: r, tolerance: tol });
        }
        Ok(SteadyState { value, tag, residual: r })
    }

    pub fn max_component(&self) -> f64 {
        self.value.iter().cloned().fold(0.0, f64::max)
    }
}

/// Max-abs of the reaction vector at `z`.
pub fn residual(z: [f64; SPECIES], p: &ModelParams) -> Result<f64> {
    Ok(model::reaction_rhs(z, p)?.max_abs())
}

/// `Z1 = 0` always; `Z2` when `b0 > d1`; `Z3` when `g0 > d4`.
pub fn trivial_states(p: &ModelParams) -> Vec<SteadyState> {
    let mut out = vec![SteadyState {
        value: [0.0; SPECIES],
        tag: SteadyTag::Z1,
        residual: 0.0,
    }];
    if let Some(z) = host_only_state(p) {
        out.push(z);
    }
    if let Some(z) = bacteria_only_state(p) {
        out.push(z);
    }
    out
}

fn host_only_state(p: &ModelParams) -> Option<SteadyState> {
    (p.b0 > p.d1).then(|| {
        let v = [p.k1 * (p.b0 - p.d1) / p.b0, 0.0, 0.0, 0.0];
        let r = raw::rhs(v, p).max_abs();
        SteadyState { value: v, tag: SteadyTag::Z2, residual: r }
    })
}

fn bacteria_only_state(p: &ModelParams) -> Option<SteadyState> {
    (p.g0 > p.d4).then(|| {
        let v = [0.0, 0.0, 0.0, p.k3 * (p.g0 - p.d4) / p.g0];
        let r = raw::rhs(v, p).max_abs();
        SteadyState { value: v, tag: SteadyTag::Z3, residual: r }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    S1,
    S2,
}

impl Branch {
    fn name(self) -> &'static str {
        match self {
            Branch::S1 => "S1",
            Branch::S2 => "S2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchIntersection {
    pub branch: Branch,
    pub i: f64,
}

/// Quantities behind the endemic existence test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndemicDiagnostics {
    pub exists: bool,
    /// Largest admissible `I` on the parabola (infinite if `b0 <= d1` makes it void).
    pub i_star: f64,
    /// `k1 (b0 - d1) / (2 b0)`.
    pub condition_lhs: f64,
    /// `(d2 + gamma) / beta2`.
    pub condition_rhs: f64,
    pub kappa: f64,
    pub branch_intersections: Vec<BranchIntersection>,
}

/// Endemic existence test `k1 (b0 - d1) / (2 b0) > (d2 + gamma) / beta2`,
/// evaluated only when `b0 > d1`.
pub fn endemic_exists(p: &ModelParams) -> (bool, EndemicDiagnostics) {
    let kappa = kappa(p);
    let a = p.b0 - p.d1;
    let lhs = p.k1 * a / (2.0 * p.b0);
    let rhs = (p.d2 + p.gamma) / p.beta2;
    let i_star = if a > 0.0 && kappa > 0.0 {
        p.k1 * a * a / (4.0 * p.b0 * kappa)
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let exists = a > 0.0 && lhs > rhs;
    (
        exists,
        EndemicDiagnostics {
            exists,
            i_star,
            condition_lhs: lhs,
            condition_rhs: rhs,
            kappa,
            branch_intersections: Vec::new(),
        },
    )
}

fn kappa(p: &ModelParams) -> f64 {
    p.d2 + p.gamma - p.sigma * p.gamma / (p.d3 + p.sigma)
}

/// Result of [`solve_endemic_detailed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndemicSolution {
    pub states: Vec<SteadyState>,
    pub diagnostics: EndemicDiagnostics,
}

/// Endemic equilibria: empty when the existence test fails, otherwise every
/// branch intersection found. A passing test with no sign change on either
/// branch is reported as [`Error::BracketFailure`].
pub fn solve_endemic(p: &ModelParams) -> Result<Vec<SteadyState>> {
    solve_endemic_detailed(p).map(|s| s.states)
}

pub fn solve_endemic_detailed(p: &ModelParams) -> Result<EndemicSolution> {
    let (exists, mut diagnostics) = endemic_exists(p);
    if !exists {
        return Ok(EndemicSolution { states: Vec::new(), diagnostics });
    }
    let curves = Curves::new(p)?;
    let roots = curves.intersections()?;
    if roots.is_empty() {
        return Err(Error::BracketFailure {
            branch: "S1/S2",
            detail: format!(
                "existence test holds ({} > {}) but S_branch(I) - S(I) has no sign change on (0, {:e}]",
                diagnostics.condition_lhs, diagnostics.condition_rhs, curves.i_star
            ),
        });
    }
    diagnostics.branch_intersections = roots.clone();
    let states = curves.assemble(&roots)?;
    Ok(EndemicSolution { states, diagnostics })
}

/// Every branch intersection on `(0, I*]` regardless of the existence test.
/// Requires `b0 > d1`; returns an empty list otherwise.
pub fn scan_branch_intersections(p: &ModelParams) -> Result<Vec<BranchIntersection>> {
    if p.b0 <= p.d1 {
        return Ok(Vec::new());
    }
    Curves::new(p)?.intersections()
}

/// Trivial states followed by any endemic states.
pub fn all_steady_states(p: &ModelParams) -> Result<Vec<SteadyState>> {
    let mut v = trivial_states(p);
    v.extend(solve_endemic(p)?);
    Ok(v)
}

/// Names one equilibrium: `Z1`, `Z2`, `Z3`, or `Z4` / `Z4#k` for the k-th
/// endemic state (0-based, in the order [`solve_endemic`] returns them).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateSelector {
    Z1,
    Z2,
    Z3,
    Z4(usize),
}

impl std::str::FromStr for StateSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z1" => Ok(StateSelector::Z1),
            "Z2" => Ok(StateSelector::Z2),
            "Z3" => Ok(StateSelector::Z3),
            "Z4" => Ok(StateSelector::Z4(0)),
            _ => s
                .strip_prefix("Z4#")
                .and_then(|k| k.parse().ok())
                .map(StateSelector::Z4)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown steady state `{s}` (expected Z1, Z2, Z3, Z4 or Z4#k)"))),
        }
    }
}

impl TryFrom<String> for StateSelector {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StateSelector> for String {
    fn from(s: StateSelector) -> String {
        s.to_string()
    }
}

impl fmt::Display for StateSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSelector::Z1 => f.write_str("Z1"),
            StateSelector::Z2 => f.write_str("Z2"),
            StateSelector::Z3 => f.write_str("Z3"),
            StateSelector::Z4(0) => f.write_str("Z4"),
            StateSelector::Z4(k) => write!(f, "Z4#{k}"),
        }
    }
}

/// Looks up the selected equilibrium; errors when it does not exist.
pub fn select_state(p: &ModelParams, which: StateSelector) -> Result<SteadyState> {
    let missing = || Error::InvalidConfig(format!("steady state {which} does not exist for these parameters"));
    match which {
        StateSelector::Z4(k) => solve_endemic(p)?.into_iter().nth(k).ok_or_else(missing),
        other => {
            let tag = match other {
                StateSelector::Z1 => SteadyTag::Z1,
                StateSelector::Z2 => SteadyTag::Z2,
                _ => SteadyTag::Z3,
            };
            trivial_states(p).into_iter().find(|z| z.tag == tag).ok_or_else(missing)
        }
    }
}

struct Curves<'a> {
    p: &'a ModelParams,
    kappa: f64,
    growth: f64,
    i_star: f64,
}

impl<'a> Curves<'a> {
    fn new(p: &'a ModelParams) -> Result<Curves<'a>> {
        let kappa = kappa(p);
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter {
                field: "d2".into(),
                reason: format!(
                    "d2 + gamma - sigma gamma / (d3 + sigma) = {kappa} must be positive for the endemic parabola"
                ),
            });
        }
        let growth = p.b0 - p.d1;
        Ok(Curves {
            p,
            kappa,
            growth,
            i_star: p.k1 * growth * growth / (4.0 * p.b0 * kappa),
        })
    }

    fn sqrt_disc(&self, i: f64) -> f64 {
        let d = self.growth * self.growth - 4.0 * self.p.b0 / self.p.k1 * self.kappa * i;
        d.max(0.0).sqrt()
    }

    fn branch(&self, b: Branch, i: f64) -> f64 {
        let root = self.sqrt_disc(i);
        match b {
            Branch::S1 => (self.growth + root) * self.p.k1 / (2.0 * self.p.b0),
            // Rationalized to avoid cancellation at small I.
            Branch::S2 => 2.0 * self.kappa * i / (self.growth + root),
        }
    }

    fn bacteria(&self, i: f64) -> f64 {
        bacteria_for_infected(self.p, i)
    }

    fn infection_curve(&self, i: f64) -> f64 {
        let b = self.bacteria(i);
        (self.p.d2 + self.p.gamma) * i / (self.p.beta1 * i + self.p.beta2 * raw::h1(b, self.p))
    }

    fn phi(&self, b: Branch, i: f64) -> f64 {
        self.branch(b, i) - self.infection_curve(i)
    }

    fn sample_points(&self) -> Vec<f64> {
        let mut t: Vec<f64> = (0..=60).map(|k| 10f64.powf(-14.0 + 11.0 * k as f64 / 60.0)).collect();
        t.extend((1..=400).map(|k| 1e-3 + (1.0 - 1e-3) * k as f64 / 400.0));
        t.into_iter().map(|x| x * self.i_star).collect()
    }

    fn intersections(&self) -> Result<Vec<BranchIntersection>> {
        let grid = self.sample_points();
        let scale = 2.0 * self.p.k1 * self.growth / (2.0 * self.p.b0);
        let mut out = Vec::new();
        for b in [Branch::S1, Branch::S2] {
            let vals: Vec<f64> = grid.iter().map(|&i| self.phi(b, i)).collect();
            for k in 0..grid.len() - 1 {
                let (f0, f1) = (vals[k], vals[k + 1]);
                if f0 == 0.0 {
                    out.push(BranchIntersection { branch: b, i: grid[k] });
                    continue;
                }
                if f0.signum() == f1.signum() || f1 == 0.0 && k + 1 < grid.len() - 1 {
                    continue;
                }
                let i = self.bisect(b, grid[k], grid[k + 1], f0, scale)?;
                out.push(BranchIntersection { branch: b, i });
            }
            if *vals.last().unwrap() == 0.0 {
                out.push(BranchIntersection { branch: b, i: *grid.last().unwrap() });
            }
        }
        Ok(out)
    }

    fn bisect(&self, b: Branch, mut lo: f64, mut hi: f64, mut f_lo: f64, scale: f64) -> Result<f64> {
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            let fm = self.phi(b, mid);
            if fm.abs() < PHI_TOL * scale || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if fm.signum() == f_lo.signum() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
        Err(Error::BracketFailure {
            branch: b.name(),
            detail: format!("bisection did not converge on [{lo:e}, {hi:e}]"),
        })
    }

    fn assemble(&self, roots: &[BranchIntersection]) -> Result<Vec<SteadyState>> {
        let mut states: Vec<(f64, SteadyState)> = Vec::new();
        for r in roots {
            let i = r.i;
            let s = self.infection_curve(i);
            let value = [s, i, self.p.gamma * i / (self.p.d3 + self.p.sigma), self.bacteria(i)];
            let tag = match r.branch {
                Branch::S1 => SteadyTag::Z4S1,
                Branch::S2 => SteadyTag::Z4S2,
            };
            if let Some((_, existing)) = states
                .iter_mut()
                .find(|(ie, _)| (ie - i).abs() <= DUPLICATE_TOL * ie.abs().max(i.abs()))
            {
                if existing.tag != tag {
                    existing.tag = SteadyTag::Z4Both;
                }
                continue;
            }
            states.push((i, SteadyState::new(value, tag, self.p)?));
        }
        Ok(states.into_iter().map(|(_, s)| s).collect())
    }
}

/// Positive root `B(I)` of the bacterial balance.
pub fn bacteria_for_infected(p: &ModelParams, i: f64) -> f64 {
    let c = p.g0 - p.d4;
    let disc = (c * c + 4.0 * p.g0 * p.xi * i / p.k3).sqrt();
    if c >= 0.0 {
        p.k3 * (c + disc) / (2.0 * p.g0)
    } else {
        2.0 * p.xi * i / (disc - c)
    }
}

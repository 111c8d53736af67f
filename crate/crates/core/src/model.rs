//! Model parameters and the reaction terms of the SIRB system.
//!
//! The state vector is ordered `(S, I, R, B)`: susceptible, infected and
//! recovered hosts followed by the bacterial concentration. Reaction terms use
//! logistic host growth, bilinear plus saturating transmission, and logistic
//! bacterial growth with capacity `k3`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of species in the system.
pub const SPECIES: usize = 4;

/// Species names in state-vector order.
pub const SPECIES_NAMES: [&str; SPECIES] = ["S", "I", "R", "B"];

/// Every scalar rate and capacity of the model.
///
/// Death rates may be zero; every other field must be strictly positive.
/// Construction goes through [`ModelParams::new`] or deserialization, both of
/// which validate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawParams")]
pub struct ModelParams {
    pub b0: f64,
    pub k1: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub k2: f64,
    pub g0: f64,
    pub k3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub xi: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    b0: f64,
    k1: f64,
    beta1: f64,
    beta2: f64,
    k2: f64,
    g0: f64,
    k3: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
    sigma: f64,
    gamma: f64,
    xi: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        let p = ModelParams {
            b0: r.b0,
            k1: r.k1,
            beta1: r.beta1,
            beta2: r.beta2,
            k2: r.k2,
            g0: r.g0,
            k3: r.k3,
            d1: r.d1,
            d2: r.d2,
            d3: r.d3,
            d4: r.d4,
            sigma: r.sigma,
            gamma: r.gamma,
            xi: r.xi,
        };
        p.validate()?;
        Ok(p)
    }
}

impl ModelParams {
    /// Names of the fields in serialization order.
    pub const FIELDS: [&'static str; 14] = [
        "b0", "k1", "beta1", "beta2", "k2", "g0", "k3", "d1", "d2", "d3", "d4", "sigma", "gamma",
        "xi",
    ];

    pub fn validate(&self) -> Result<()> {
        for name in Self::FIELDS {
            let v = self.get(name).expect("known field");
            let death = name.starts_with('d');
            let bad = !v.is_finite() || if death { v < 0.0 } else { v <= 0.0 };
            if bad {
                let reason = if death {
                    format!("must be finite and >= 0, got {v}")
                } else {
                    format!("must be finite and > 0, got {v}")
                };
                return Err(Error::InvalidParameter {
                    field: name.to_string(),
                    reason,
                });
            }
        }
        Ok(())
    }

    /// Reads a field by its serialized name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "b0" => self.b0,
            "k1" => self.k1,
            "beta1" => self.beta1,
            "beta2" => self.beta2,
            "k2" => self.k2,
            "g0" => self.g0,
            "k3" => self.k3,
            "d1" => self.d1,
            "d2" => self.d2,
            "d3" => self.d3,
            "d4" => self.d4,
            "sigma" => self.sigma,
            "gamma" => self.gamma,
            "xi" => self.xi,
            _ => return None,
        })
    }

    /// Returns a copy with one field replaced, validating the result.
    pub fn with(&self, name: &str, value: f64) -> Result<ModelParams> {
        let mut p = *self;
        let slot = match name {
            "b0" => &mut p.b0,
            "k1" => &mut p.k1,
            "beta1" => &mut p.beta1,
            "beta2" => &mut p.beta2,
            "k2" => &mut p.k2,
            "g0" => &mut p.g0,
            "k3" => &mut p.k3,
            "d1" => &mut p.d1,
            "d2" => &mut p.d2,
            "d3" => &mut p.d3,
            "d4" => &mut p.d4,
            "sigma" => &mut p.sigma,
            "gamma" => &mut p.gamma,
            "xi" => &mut p.xi,
            _ => {
                return Err(Error::InvalidParameter {
                    field: name.to_string(),
                    reason: "no such model parameter".into(),
                })
            }
        };
        *slot = value;
        p.validate()?;
        Ok(p)
    }

    /// Copy with the host and bacterial growth rates replaced by local values.
    pub(crate) fn with_local_rates(&self, b0: f64, g0: f64) -> ModelParams {
        ModelParams { b0, g0, ..*self }
    }
}

/// Reaction rates `(f1, f2, f3, f4)`, one per species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionVector {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl ReactionVector {
    pub fn to_array(self) -> [f64; SPECIES] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn nonneg(quantity: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeInput { quantity, value })
    }
}

/// Logistic host growth `b0 s (1 - s/k1)`.
pub fn logistic_b(s: f64, p: &ModelParams) -> Result<f64> {
    nonneg("S", s)?;
    Ok(raw::logistic_b(s, p))
}

/// Saturating bacterial infectivity `B / (B + k2)`.
pub fn saturation_h1(b: f64, p: &ModelParams) -> Result<f64> {
    nonneg("B", b)?;
    Ok(raw::h1(b, p))
}

/// Derivative of [`saturation_h1`]: `k2 / (B + k2)^2`.
pub fn saturation_h1_prime(b: f64, p: &ModelParams) -> Result<f64> {
    nonneg("B", b)?;
    Ok(raw::h1_prime(b, p))
}

/// Infection incidence `beta1 S I + beta2 S h1(B)`.
pub fn infection_g1(s: f64, i: f64, b: f64, p: &ModelParams) -> Result<f64> {
    nonneg("S", s)?;
    nonneg("I", i)?;
    nonneg("B", b)?;
    Ok(raw::g1(s, i, b, p))
}

/// Logistic bacterial growth `g0 B (1 - B/k3)`.
pub fn bacterial_g2(b: f64, p: &ModelParams) -> Result<f64> {
    nonneg("B", b)?;
    Ok(raw::g2(b, p))
}

/// Full reaction vector at a nonnegative state `(S, I, R, B)`.
pub fn reaction_rhs(u: [f64; SPECIES], p: &ModelParams) -> Result<ReactionVector> {
    for (k, &v) in u.iter().enumerate() {
        nonneg(SPECIES_NAMES[k], v)?;
    }
    Ok(raw::rhs(u, p))
}

/// Analytic Jacobian `df_i/du_j` of the reaction terms at `u`.
pub fn reaction_jacobian(u: [f64; SPECIES], p: &ModelParams) -> Result<[[f64; SPECIES]; SPECIES]> {
    for (k, &v) in u.iter().enumerate() {
        nonneg(SPECIES_NAMES[k], v)?;
    }
    Ok(raw::jacobian(u, p))
}

/// Unchecked kernels. The integrator calls these after its own positivity
/// monitoring, which tolerates round-off undershoot at the 1e-12 level.
pub(crate) mod raw {
    use super::{ModelParams, ReactionVector, SPECIES};

    #[inline]
    pub fn logistic_b(s: f64, p: &ModelParams) -> f64 {
        p.b0 * s * (1.0 - s / p.k1)
    }

    #[inline]
    pub fn h1(b: f64, p: &ModelParams) -> f64 {
        b / (b + p.k2)
    }

    #[inline]
    pub fn h1_prime(b: f64, p: &ModelParams) -> f64 {
        let d = b + p.k2;
        p.k2 / (d * d)
    }

    #[inline]
    pub fn g1(s: f64, i: f64, b: f64, p: &ModelParams) -> f64 {
        p.beta1 * s * i + p.beta2 * s * h1(b, p)
    }

    #[inline]
    pub fn g2(b: f64, p: &ModelParams) -> f64 {
        p.g0 * b * (1.0 - b / p.k3)
    }

    #[inline]
    pub fn rhs(u: [f64; SPECIES], p: &ModelParams) -> ReactionVector {
        let [s, i, r, b] = u;
        let inc = g1(s, i, b, p);
        ReactionVector {
            f1: logistic_b(s, p) - inc - p.d1 * s + p.sigma * r,
            f2: inc - (p.d2 + p.gamma) * i,
            f3: p.gamma * i - (p.d3 + p.sigma) * r,
            f4: p.xi * i + g2(b, p) - p.d4 * b,
        }
    }

    pub fn jacobian(u: [f64; SPECIES], p: &ModelParams) -> [[f64; SPECIES]; SPECIES] {
        let [s, i, _r, b] = u;
        let h = h1(b, p);
        let hp = h1_prime(b, p);
        let db = p.b0 * (1.0 - 2.0 * s / p.k1);
        let dg2 = p.g0 * (1.0 - 2.0 * b / p.k3);
        let force = p.beta1 * i + p.beta2 * h;
        [
            [db - force - p.d1, -p.beta1 * s, p.sigma, -p.beta2 * s * hp],
            [force, p.beta1 * s - (p.d2 + p.gamma), 0.0, p.beta2 * s * hp],
            [0.0, p.gamma, -(p.d3 + p.sigma), 0.0],
            [0.0, p.xi, 0.0, dg2 - p.d4],
        ]
    }
}

/// Named hypothesis bundles that [`check_regime`] can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Structural conditions on the reaction terms (growth, quasi-positivity).
    H23,
    /// Global-boundedness damping: `d1 > b0`, `d4 > g0`.
    Cor21,
    /// Constant-coefficient regime used by the stability analysis.
    H51,
    /// Sufficient decay conditions evaluated at the trivial state.
    Thm22Candidate,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H23" => Ok(Regime::H23),
            "Cor21" => Ok(Regime::Cor21),
            "H51" => Ok(Regime::H51),
            "Thm22-candidate" => Ok(Regime::Thm22Candidate),
            other => Err(Error::UnknownRegime(other.to_string())),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::H23 => "H23",
            Regime::Cor21 => "Cor21",
            Regime::H51 => "H51",
            Regime::Thm22Candidate => "Thm22-candidate",
        })
    }
}

/// One inequality of a hypothesis, written as `margin > 0` (strict) or
/// `margin >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub margin: f64,
    pub strict: bool,
    pub satisfied: bool,
}

impl Condition {
    pub fn new(name: impl Into<String>, margin: f64, strict: bool) -> Self {
        let satisfied = if strict { margin > 0.0 } else { margin >= 0.0 };
        Condition {
            name: name.into(),
            margin,
            strict,
            satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub conditions: Vec<Condition>,
}

impl RegimeReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Evaluates the inequalities of a named hypothesis. Violations are reported,
/// never raised.
pub fn check_regime(p: &ModelParams, regime: Regime) -> RegimeReport {
    let mut conditions = Vec::new();
    match regime {
        Regime::H23 => {
            // b(0) = g1(0,.,.) = g2(0) = 0, so quasi-positivity holds with zero margin.
            conditions.push(Condition::new("b(0) >= 0", raw::logistic_b(0.0, p), false));
            conditions.push(Condition::new("g2(0) >= 0", raw::g2(0.0, p), false));
            conditions.push(Condition::new("g1(0, I, B) >= 0", raw::g1(0.0, 1.0, 1.0, p), false));
            // sup_s b'(s) = b0 and sup_s g2'(s) = g0.
            conditions.push(Condition::new("b0 - sup b'(s) >= 0", 0.0, false));
            conditions.push(Condition::new("g0 - sup g2'(s) >= 0", 0.0, false));
            for (name, d) in [("d1", p.d1), ("d2", p.d2), ("d3", p.d3), ("d4", p.d4)] {
                conditions.push(Condition::new(format!("{name} >= 0"), d, false));
            }
        }
        Regime::Cor21 => {
            conditions.push(Condition::new("d1 - b0 > 0", p.d1 - p.b0, true));
            conditions.push(Condition::new("d4 - g0 > 0", p.d4 - p.g0, true));
        }
        Regime::H51 => {
            for (name, d) in [("d1", p.d1), ("d2", p.d2), ("d3", p.d3), ("d4", p.d4)] {
                conditions.push(Condition::new(format!("{name} > 0"), d, true));
            }
            for name in ["b0", "g0", "k1", "k2", "k3", "beta1", "beta2", "sigma", "gamma", "xi"] {
                let v = p.get(name).expect("known field");
                conditions.push(Condition::new(format!("{name} > 0"), v, true));
            }
        }
        Regime::Thm22Candidate => {
            // At the trivial state S* = B* = 0: B0 = b0, G0 = g0, U0 = 0.
            conditions.push(Condition::new("d1 - B0 > 0", p.d1 - p.b0, true));
            conditions.push(Condition::new("d4 - G0 > 0", p.d4 - p.g0, true));
            conditions.push(Condition::new("d2 + gamma - beta1*U0 > 0", p.d2 + p.gamma, true));
            conditions.push(Condition::new("d3 + sigma > 0", p.d3 + p.sigma, true));
        }
    }
    RegimeReport { regime, conditions }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn base() -> ModelParams {
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

    #[test]
    fn logistic_values() {
        let p = base();
        assert_eq!(logistic_b(0.0, &p).unwrap(), 0.0);
        assert_eq!(logistic_b(p.k1, &p).unwrap(), 0.0);
        assert_eq!(logistic_b(5.0, &p).unwrap(), 5.0);
        assert!(logistic_b(12.0, &p).unwrap() < 0.0);
        assert!(matches!(logistic_b(-1.0, &p), Err(Error::NegativeInput { .. })));
    }

    #[test]
    fn saturation_values() {
        let p = base();
        assert_eq!(saturation_h1(0.0, &p).unwrap(), 0.0);
        assert_eq!(saturation_h1(p.k2, &p).unwrap(), 0.5);
        let far = saturation_h1(1e12 * p.k2, &p).unwrap();
        assert!((far - 1.0).abs() < 1e-10 && far < 1.0);
        assert!(saturation_h1(-0.1, &p).is_err());
    }

    #[test]
    fn h1_derivative_matches_central_differences() {
        let p = base();
        for &b in &[0.01, 0.3, 1.0, 4.0, 25.0] {
            let h = 1e-5 * (1.0 + b);
            let fd = (raw::h1(b + h, &p) - raw::h1(b - h, &p)) / (2.0 * h);
            let exact = saturation_h1_prime(b, &p).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "b={b}: {fd} vs {exact}");
        }
    }

    #[test]
    fn infection_values() {
        let p = base();
        assert_eq!(infection_g1(0.0, 3.0, 2.0, &p).unwrap(), 0.0);
        assert_eq!(infection_g1(4.0, 0.0, 0.0, &p).unwrap(), 0.0);
        // 1*1*3 + 2*1*0.5
        assert_eq!(infection_g1(1.0, 3.0, 1.0, &p).unwrap(), 4.0);
        assert!(infection_g1(1.0, -3.0, 1.0, &p).is_err());
    }

    #[test]
    fn bacterial_growth_values() {
        let p = base();
        assert_eq!(bacterial_g2(0.0, &p).unwrap(), 0.0);
        assert_eq!(bacterial_g2(p.k3, &p).unwrap(), 0.0);
        assert_eq!(bacterial_g2(2.0, &p).unwrap(), 4.0);
        assert!(bacterial_g2(-2.0, &p).is_err());
    }

    #[test]
    fn rhs_at_origin_and_worked_point() {
        let p = base();
        assert_eq!(
            reaction_rhs([0.0; 4], &p).unwrap().to_array(),
            [0.0; 4]
        );
        let f = reaction_rhs([1.0, 3.0, 2.0, 1.0], &p).unwrap();
        assert!((f.f1 - (-2.2)).abs() < 1e-14, "f1 = {}", f.f1);
        assert!(reaction_rhs([1.0, 3.0, -2.0, 1.0], &p).is_err());
    }

    #[test]
    fn rhs_vanishes_at_host_only_equilibrium() {
        let p = base();
        let s = p.k1 * (p.b0 - p.d1) / p.b0;
        let f = reaction_rhs([s, 0.0, 0.0, 0.0], &p).unwrap();
        assert!(f.max_abs() < 1e-12);
    }

    #[test]
    fn regime_reports() {
        let mut p = base();
        p.b0 = 2.0;
        p.d1 = 1.0;
        let r = check_regime(&p, Regime::Cor21);
        let c = r.condition("d1 - b0 > 0").unwrap();
        assert!(!c.satisfied);
        assert_eq!(c.margin, -1.0);

        p.b0 = 1.0;
        p.d1 = 2.0;
        let c = check_regime(&p, Regime::Cor21).condition("d1 - b0 > 0").cloned().unwrap();
        assert!(c.satisfied);
        assert_eq!(c.margin, 1.0);

        assert!(check_regime(&base(), Regime::H51).all_satisfied());
        assert!(check_regime(&base(), Regime::H23).all_satisfied());
        assert!(matches!("H99".parse::<Regime>(), Err(Error::UnknownRegime(_))));
        assert_eq!("Thm22-candidate".parse::<Regime>().unwrap(), Regime::Thm22Candidate);
    }

    #[test]
    fn json_rejects_unknown_and_invalid_fields() {
        let good = serde_json::to_string(&base()).unwrap();
        let back: ModelParams = serde_json::from_str(&good).unwrap();
        assert_eq!(back, base());

        let typo = good.replace("\"beta1\"", "\"beta_1\"");
        assert!(serde_json::from_str::<ModelParams>(&typo).is_err());

        let neg = good.replace("\"beta1\":1.0", "\"beta1\":-1.0");
        let err = serde_json::from_str::<ModelParams>(&neg).unwrap_err().to_string();
        assert!(err.contains("beta1"), "{err}");
    }

    fn params_strategy() -> impl Strategy<Value = ModelParams> {
        let pos = || 0.01f64..10.0;
        (
            (pos(), pos(), pos(), pos(), pos(), pos(), pos()),
            (0.0f64..5.0, 0.0f64..5.0, 0.0f64..5.0, 0.0f64..5.0, pos(), pos(), pos()),
        )
            .prop_map(|((b0, k1, beta1, beta2, k2, g0, k3), (d1, d2, d3, d4, sigma, gamma, xi))| {
                ModelParams {
                    b0,
                    k1,
                    beta1,
                    beta2,
                    k2,
                    g0,
                    k3,
                    d1,
                    d2,
                    d3,
                    d4,
                    sigma,
                    gamma,
                    xi,
                }
            })
    }

    proptest! {
        #[test]
        fn quasi_positivity(p in params_strategy(), u in prop::array::uniform4(0.0f64..50.0), zero in 0usize..4) {
            let mut u = u;
            u[zero] = 0.0;
            let f = reaction_rhs(u, &p).unwrap().to_array();
            prop_assert!(f[zero] >= 0.0, "f[{}] = {} at {:?}", zero, f[zero], u);
        }

        #[test]
        fn host_sum_identity(p in params_strategy(), u in prop::array::uniform4(0.0f64..50.0)) {
            let f = reaction_rhs(u, &p).unwrap();
            let [s, i, r, _] = u;
            let lhs = f.f1 + f.f2;
            let rhs = raw::logistic_b(s, &p) - p.d1 * s + p.sigma * r - (p.d2 + p.gamma) * i;
            let scale = 1.0 + raw::logistic_b(s, &p).abs() + raw::g1(s, i, u[3], &p) + p.d1 * s + p.sigma * r + (p.d2 + p.gamma) * i;
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }

        #[test]
        fn h1_monotone_and_bounded(p in params_strategy(), a in 0.0f64..1e3, b in 0.0f64..1e3) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let hl = saturation_h1(lo, &p).unwrap();
            let hh = saturation_h1(hi, &p).unwrap();
            prop_assert!(hl <= hh);
            prop_assert!((0.0..1.0).contains(&hh));
        }
    }
}

//! Linear stability of constant equilibria under Neumann diffusion modes.
//!
//! For each Laplacian eigenvalue `lambda` the perturbation amplitude obeys
//! `dz/dt = (J - lambda A) z`, with `J` the reaction Jacobian at the
//! equilibrium and `A` the diagonal of constant diffusion rates. Each mode is
//! classified from the numerically computed spectrum and, independently, from
//! closed-form factorizations (or the Routh-Hurwitz test), and the two are
//! required to agree.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeSpectrum;
use crate::linalg::{char_poly4, eigenvalues4, norm_inf, routh_hurwitz4, Matrix4, Verdict};
use crate::model::{raw, Condition, ModelParams, SPECIES};
use crate::steady_state::{SteadyState, SteadyTag};

/// Relative width of the marginal band around zero real part.
pub const MARGINAL_REL_TOL: f64 = 1e-9;

/// `1e-9 * (1 + ||M||_inf)`.
pub fn tol_marginal(m: &Matrix4) -> f64 {
    MARGINAL_REL_TOL * (1.0 + norm_inf(m))
}

/// Constant diffusion rates `(a1, a2, a3, a4)`, all positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct DiffusionMatrix([f64; SPECIES]);

impl DiffusionMatrix {
    pub fn new(a: [f64; SPECIES]) -> Result<DiffusionMatrix> {
        for (i, v) in a.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidParameter {
                    field: format!("a{}", i + 1),
                    reason: format!("diffusion rate must be positive and finite, got {v}"),
                });
            }
        }
        Ok(DiffusionMatrix(a))
    }

    pub fn diag(&self) -> [f64; SPECIES] {
        self.0
    }
}

impl TryFrom<[f64; 4]> for DiffusionMatrix {
    type Error = Error;
    fn try_from(a: [f64; 4]) -> Result<Self> {
        DiffusionMatrix::new(a)
    }
}

impl From<DiffusionMatrix> for [f64; 4] {
    fn from(a: DiffusionMatrix) -> Self {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianSource {
    Z1,
    Z2,
    Z3,
    Z4,
    #[serde(rename = "numeric")]
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian4 {
    pub entries: Matrix4,
    pub source: JacobianSource,
}

/// Analytic Jacobian of the reaction terms at `z`.
pub fn jacobian(z: &SteadyState, p: &ModelParams) -> Jacobian4 {
    let source = match z.tag {
        SteadyTag::Z1 => JacobianSource::Z1,
        SteadyTag::Z2 => JacobianSource::Z2,
        SteadyTag::Z3 => JacobianSource::Z3,
        _ => JacobianSource::Z4,
    };
    Jacobian4 {
        entries: raw::jacobian(z.value, p),
        source,
    }
}

/// Central-difference Jacobian of the reaction terms at any point `u`.
pub fn numeric_jacobian(u: [f64; SPECIES], p: &ModelParams) -> Result<Jacobian4> {
    p.validate()?;
    let mut entries = [[0.0; SPECIES]; SPECIES];
    for k in 0..SPECIES {
        let h = 1e-6 * (1.0 + u[k].abs());
        let mut up = u;
        let mut um = u;
        up[k] += h;
        um[k] -= h;
        let fp = raw::rhs(up, p).to_array();
        let fm = raw::rhs(um, p).to_array();
        for i in 0..SPECIES {
            entries[i][k] = (fp[i] - fm[i]) / (up[k] - um[k]);
        }
    }
    Ok(Jacobian4 {
        entries,
        source: JacobianSource::Numeric,
    })
}

/// `J - lambda * diag(A)`.
pub fn mode_matrix(j: &Jacobian4, a: &DiffusionMatrix, lambda: f64) -> Matrix4 {
    debug_assert!(lambda >= 0.0);
    let mut m = j.entries;
    for (i, ai) in a.diag().iter().enumerate() {
        m[i][i] -= lambda * ai;
    }
    m
}

/// Coefficients of the monic cubic `mu^3 + p mu^2 + q mu + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoeffs {
    pub p: f64,
    pub q: f64,
    pub h: f64,
}

impl CubicCoeffs {
    fn tolerance(&self) -> f64 {
        let s = self.p.abs().max(self.q.abs().sqrt()).max(self.h.abs().cbrt());
        MARGINAL_REL_TOL * (1.0 + s).powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum CubicClass {
    HasPositiveRoot,
    AllNegativeRealParts,
    HasPositiveRealPart,
    /// `h = pq` or `h = 0` within tolerance; the roots are then known in
    /// closed form.
    Boundary {
        #[serde(with = "complex_triple")]
        roots: [Complex64; 3],
    },
}

impl CubicClass {
    pub fn verdict(&self, tol: f64) -> Verdict {
        match self {
            CubicClass::HasPositiveRoot | CubicClass::HasPositiveRealPart => Verdict::Unstable,
            CubicClass::AllNegativeRealParts => Verdict::Stable,
            CubicClass::Boundary { roots } => {
                let max_re = roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                // A boundary root sits on the imaginary axis: never stable.
                match Verdict::from_max_real(max_re, tol) {
                    Verdict::Stable => Verdict::Marginal,
                    v => v,
                }
            }
        }
    }
}

/// Sign classification of a cubic with positive `p`.
///
/// The exact boundary `h = pq` is tested first, so that it reports its known
/// roots `-p, +-sqrt(-q)` even when `h < 0`. Then `h < 0` (a positive real
/// root), `h = 0` (a zero root), `h < pq` (all roots in the left half-plane)
/// and otherwise a complex pair in the right half-plane.
pub fn classify_cubic(c: CubicCoeffs) -> Result<CubicClass> {
    if !(c.p > 0.0) {
        return Err(Error::NonPositiveTrace(c.p));
    }
    let tol = c.tolerance();
    let pq = c.p * c.q;
    if (c.h - pq).abs() <= tol {
        let r = Complex64::new(-c.q, 0.0).sqrt();
        return Ok(CubicClass::Boundary {
            roots: [Complex64::new(-c.p, 0.0), r, -r],
        });
    }
    if c.h < -tol {
        return Ok(CubicClass::HasPositiveRoot);
    }
    if c.h <= tol {
        let d = Complex64::new(c.p * c.p - 4.0 * c.q, 0.0).sqrt();
        return Ok(CubicClass::Boundary {
            roots: [Complex64::new(0.0, 0.0), (-c.p + d) / 2.0, (-c.p - d) / 2.0],
        });
    }
    if c.h < pq {
        Ok(CubicClass::AllNegativeRealParts)
    } else {
        Ok(CubicClass::HasPositiveRealPart)
    }
}

/// Verdict of the `(S, I, R)` cubic plus decoupled `B` rate for an endemic
/// state. The `B` equation is not truly decoupled there, so `agrees` records
/// whether this reduced verdict matches the full 4x4 one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCheck {
    pub cubic: CubicCoeffs,
    pub cubic_class: Option<CubicClass>,
    pub decoupled_rate: f64,
    pub verdict: Verdict,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVerdict {
    pub index: usize,
    pub lambda: f64,
    /// `(re, im)` pairs, largest real part first.
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_real_part: f64,
    pub verdict: Verdict,
    /// Verdict from the closed-form factorization for this equilibrium.
    pub closed_form: Verdict,
    /// Largest distance between closed-form and numeric eigenvalues, when the
    /// closed form provides all four.
    pub closed_form_deviation: Option<f64>,
    pub routh_hurwitz: Verdict,
    pub reduced: Option<ReducedCheck>,
}

/// Gershgorin certificate for the modes beyond the listed ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    /// For `lambda` above this every Gershgorin disc of the mode matrix lies
    /// strictly in the left half-plane.
    pub lambda_threshold: f64,
    pub lambda_max_listed: f64,
    pub covered: bool,
}

/// Scalars from the closed-form analyses, evaluated at `lambda = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxQuantities {
    pub m0: Option<f64>,
    #[serde(rename = "M1")]
    pub big_m1: Option<f64>,
    #[serde(rename = "M2")]
    pub big_m2: Option<f64>,
    /// Cubic coefficients of the `(S, I, R)` block at `Z3`.
    pub cubic: Option<CubicCoeffs>,
    #[serde(rename = "L0")]
    pub l0: Option<f64>,
    pub p0: Option<f64>,
    pub q0: Option<f64>,
    pub h0: Option<f64>,
    #[serde(rename = "B0")]
    pub b_bound: f64,
    #[serde(rename = "G0")]
    pub g_bound: f64,
}

/// Sufficient-condition margins for local stability of an equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMargins {
    /// `|b0 (1 - 2 S*/k1)|`.
    #[serde(rename = "B0")]
    pub b_bound: f64,
    /// `|g0 (1 - 2 B*/k3)|`.
    #[serde(rename = "G0")]
    pub g_bound: f64,
    pub d1_margin: f64,
    pub d4_margin: f64,
    /// `max S*`; constant for a constant state.
    #[serde(rename = "U0")]
    pub u0: f64,
    /// Margins together with the smallness conditions on the coupling terms.
    pub conditions: Vec<Condition>,
}

impl StabilityMargins {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }
}

pub fn theorem22_margins(z: &SteadyState, p: &ModelParams) -> StabilityMargins {
    let [s, _, _, b] = z.value;
    let b_bound = (p.b0 * (1.0 - 2.0 * s / p.k1)).abs();
    let g_bound = (p.g0 * (1.0 - 2.0 * b / p.k3)).abs();
    let u0 = s;
    let conditions = vec![
        Condition::new("d1 - B0 > 0", p.d1 - b_bound, true),
        Condition::new("d4 - G0 > 0", p.d4 - g_bound, true),
        Condition::new("d2 + gamma - beta1*U0 > 0", p.d2 + p.gamma - p.beta1 * u0, true),
        Condition::new("d3 + sigma > 0", p.d3 + p.sigma, true),
    ];
    StabilityMargins {
        b_bound,
        g_bound,
        d1_margin: p.d1 - b_bound,
        d4_margin: p.d4 - g_bound,
        u0,
        conditions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub state: SteadyState,
    pub diffusion: DiffusionMatrix,
    pub jacobian: Jacobian4,
    pub modes: Vec<ModeVerdict>,
    pub tail: TailCheck,
    pub overall: Verdict,
    pub turing: bool,
    pub aux: AuxQuantities,
    pub margins: StabilityMargins,
}

impl StabilityReport {
    /// The `lambda = 0` entry.
    pub fn mode_zero(&self) -> &ModeVerdict {
        self.modes
            .iter()
            .find(|m| m.lambda == 0.0)
            .expect("reports always include lambda = 0")
    }

    /// Verdicts of the modes with `lambda > 0` that are unstable.
    pub fn unstable_modes(&self) -> impl Iterator<Item = &ModeVerdict> {
        self.modes.iter().filter(|m| m.verdict == Verdict::Unstable)
    }
}

pub fn classify_state(
    z: &SteadyState,
    p: &ModelParams,
    a: &DiffusionMatrix,
    modes: &ModeSpectrum,
) -> Result<StabilityReport> {
    let lambdas: Vec<(usize, f64)> = modes.modes().iter().map(|m| (m.index, m.lambda)).collect();
    classify_state_at(z, p, a, &lambdas)
}

/// As [`classify_state`] for an explicit list of `(index, lambda)` pairs.
pub fn classify_state_at(
    z: &SteadyState,
    p: &ModelParams,
    a: &DiffusionMatrix,
    lambdas: &[(usize, f64)],
) -> Result<StabilityReport> {
    p.validate()?;
    if !lambdas.iter().any(|&(_, l)| l == 0.0) {
        return Err(Error::InvalidConfig("mode list must include lambda = 0".into()));
    }
    if let Some(&(index, l)) = lambdas.iter().find(|&&(_, l)| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::ModeOutOfRange {
            index,
            reason: format!("eigenvalue {l} is not a finite nonnegative number"),
        });
    }
    let jac = jacobian(z, p);
    let mut verdicts = Vec::with_capacity(lambdas.len());
    for &(index, lambda) in lambdas {
        verdicts.push(classify_mode(z, p, a, &jac, index, lambda)?);
    }

    let tail = tail_check(&jac, a, lambdas);
    let any_unstable = verdicts.iter().any(|m| m.verdict == Verdict::Unstable);
    let all_stable = verdicts.iter().all(|m| m.verdict == Verdict::Stable);
    let overall = if any_unstable {
        Verdict::Unstable
    } else if all_stable && tail.covered {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };
    let zero_stable = verdicts
        .iter()
        .filter(|m| m.lambda == 0.0)
        .all(|m| m.verdict == Verdict::Stable);
    let turing = zero_stable
        && verdicts
            .iter()
            .any(|m| m.lambda > 0.0 && m.verdict == Verdict::Unstable);

    let margins = theorem22_margins(z, p);
    let aux = aux_quantities(z, p, &margins);
    Ok(StabilityReport {
        state: z.clone(),
        diffusion: *a,
        jacobian: jac,
        modes: verdicts,
        tail,
        overall,
        turing,
        aux,
        margins,
    })
}

fn classify_mode(
    z: &SteadyState,
    p: &ModelParams,
    a: &DiffusionMatrix,
    jac: &Jacobian4,
    index: usize,
    lambda: f64,
) -> Result<ModeVerdict> {
    let m = mode_matrix(jac, a, lambda);
    let tol = tol_marginal(&m);
    let ev = eigenvalues4(&m)?;
    let max_re = ev[0].re;
    let verdict = Verdict::from_max_real(max_re, tol);
    let rh = routh_hurwitz4(char_poly4(&m), 1.0 + norm_inf(&m), MARGINAL_REL_TOL);

    let closed = closed_form(z, p, a, lambda, tol);
    let closed_verdict = closed.verdict.unwrap_or(rh);
    let deviation = closed.eigenvalues.map(|c| match_distance(&c, &ev));

    let fail = |what: &str, other: Verdict| {
        Error::InternalConsistency(format!(
            "{} mode {index} (lambda = {lambda}): numeric eigenvalues say {} but {what} says {}",
            z.tag,
            verdict.as_str(),
            other.as_str()
        ))
    };
    if verdict.conflicts(rh) {
        return Err(fail("Routh-Hurwitz", rh));
    }
    if verdict.conflicts(closed_verdict) {
        return Err(fail("the closed form", closed_verdict));
    }

    let reduced = z.tag.is_endemic().then(|| {
        let cubic = endemic_cubic(z, p, a, lambda);
        let cubic_class = classify_cubic(cubic).ok();
        let decoupled_rate = jac.entries[3][3] - lambda * a.diag()[3];
        let cubic_verdict = match cubic_class {
            Some(c) => c.verdict(tol),
            // Non-positive trace: the roots sum to -p >= 0.
            None if cubic.p < -tol => Verdict::Unstable,
            None => Verdict::Marginal,
        };
        let rate_verdict = Verdict::from_max_real(decoupled_rate, tol);
        let v = combine(cubic_verdict, rate_verdict);
        ReducedCheck {
            cubic,
            cubic_class,
            decoupled_rate,
            verdict: v,
            agrees: v == verdict,
        }
    });

    Ok(ModeVerdict {
        index,
        lambda,
        eigenvalues: ev.iter().map(|z| [z.re, z.im]).collect(),
        max_real_part: max_re,
        verdict,
        closed_form: closed_verdict,
        closed_form_deviation: deviation,
        routh_hurwitz: rh,
        reduced,
    })
}

/// Unstable dominates, then marginal.
fn combine(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Unstable, _) | (_, Verdict::Unstable) => Verdict::Unstable,
        (Verdict::Stable, Verdict::Stable) => Verdict::Stable,
        _ => Verdict::Marginal,
    }
}

struct ClosedForm {
    /// `None` when the closed form is the Routh-Hurwitz test itself.
    verdict: Option<Verdict>,
    eigenvalues: Option<[Complex64; 4]>,
}

fn closed_form(z: &SteadyState, p: &ModelParams, a: &DiffusionMatrix, lambda: f64, tol: f64) -> ClosedForm {
    let [a1, a2, a3, a4] = a.diag();
    let re = |x: f64| Complex64::new(x, 0.0);
    match z.tag {
        SteadyTag::Z1 => {
            let mu = [
                p.b0 - p.d1 - lambda * a1,
                -(p.d2 + p.gamma) - lambda * a2,
                -(p.d3 + p.sigma) - lambda * a3,
                p.g0 - p.d4 - lambda * a4,
            ];
            let max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            ClosedForm {
                verdict: Some(Verdict::from_max_real(max, tol)),
                eigenvalues: Some(mu.map(re)),
            }
        }
        SteadyTag::Z2 => {
            let s = z.value[0];
            let mu1 = -(p.b0 - p.d1) - lambda * a1;
            let mu2 = -(p.d3 + p.sigma) - lambda * a3;
            let e_i = p.beta1 * s - (p.d2 + p.gamma + lambda * a2);
            let e_b = p.g0 - p.d4 - lambda * a4;
            let m1 = e_i + e_b;
            let m2 = e_i * e_b - p.xi * p.beta2 * s / p.k2;
            let disc = Complex64::new(m1 * m1 - 4.0 * m2, 0.0).sqrt();
            let mu = [re(mu1), re(mu2), (re(m1) + disc) / 2.0, (re(m1) - disc) / 2.0];
            // The (I, B) block is stable iff its trace is negative and its
            // determinant positive.
            let block = if m1 > tol || m2 < -tol * tol.max(1.0) {
                Verdict::Unstable
            } else if m1 < -tol && m2 > tol * tol.max(1.0) {
                Verdict::Stable
            } else {
                Verdict::Marginal
            };
            let rest = Verdict::from_max_real(mu1.max(mu2), tol);
            ClosedForm {
                verdict: Some(combine(block, rest)),
                eigenvalues: Some(mu),
            }
        }
        SteadyTag::Z3 => {
            let mu_b = -(p.g0 - p.d4) - lambda * a4;
            let c = z3_cubic(z, p, a, lambda);
            let cubic = match classify_cubic(c) {
                Ok(class) => class.verdict(tol),
                Err(_) if c.p < -tol => Verdict::Unstable,
                Err(_) => Verdict::Marginal,
            };
            ClosedForm {
                verdict: Some(combine(cubic, Verdict::from_max_real(mu_b, tol))),
                eigenvalues: None,
            }
        }
        _ => ClosedForm {
            verdict: None,
            eigenvalues: None,
        },
    }
}

/// Cubic of the `(S, I, R)` block at `Z3`, where `B` decouples exactly.
fn z3_cubic(z: &SteadyState, p: &ModelParams, a: &DiffusionMatrix, lambda: f64) -> CubicCoeffs {
    let [a1, a2, a3, _] = a.diag();
    let force = p.beta2 * raw::h1(z.value[3], p);
    let e1 = p.d1 + force + lambda * a1 - p.b0;
    let e2 = p.d2 + p.gamma + lambda * a2;
    let e3 = p.d3 + p.sigma + lambda * a3;
    CubicCoeffs {
        p: e1 + e2 + e3,
        q: e1 * e2 + e1 * e3 + e2 * e3,
        h: e1 * e2 * e3 - p.sigma * p.gamma * force,
    }
}

/// Characteristic cubic of the `(S, I, R)` block of the Jacobian at an
/// endemic state, ignoring the `B` coupling.
fn endemic_cubic(z: &SteadyState, p: &ModelParams, a: &DiffusionMatrix, lambda: f64) -> CubicCoeffs {
    let [a1, a2, a3, _] = a.diag();
    let (l0, e2, e3, c, bs) = endemic_blocks(z, p);
    let l = l0 + lambda * a1;
    let e2 = e2 + lambda * a2;
    let e3 = e3 + lambda * a3;
    CubicCoeffs {
        p: l + e2 + e3,
        q: l * e2 + l * e3 + e2 * e3 + bs * c,
        h: l * e2 * e3 + bs * c * e3 - p.sigma * p.gamma * c,
    }
}

/// `(L0, E2, E3, c, beta1 S)` with `J11 = -L0`, `J22 = -E2`, `J33 = -E3`,
/// `J21 = c`, `J12 = -beta1 S`.
fn endemic_blocks(z: &SteadyState, p: &ModelParams) -> (f64, f64, f64, f64, f64) {
    let j = raw::jacobian(z.value, p);
    (-j[0][0], -j[1][1], -j[2][2], j[1][0], p.beta1 * z.value[0])
}

fn aux_quantities(z: &SteadyState, p: &ModelParams, margins: &StabilityMargins) -> AuxQuantities {
    let mut aux = AuxQuantities {
        b_bound: margins.b_bound,
        g_bound: margins.g_bound,
        ..AuxQuantities::default()
    };
    // Aux scalars are evaluated at lambda = 0, where A drops out.
    let unit = DiffusionMatrix([1.0; SPECIES]);
    match z.tag {
        SteadyTag::Z1 => {}
        SteadyTag::Z2 => {
            let s = z.value[0];
            let m0 = p.beta1 * s;
            let e_i = m0 - (p.d2 + p.gamma);
            let e_b = p.g0 - p.d4;
            aux.m0 = Some(m0);
            aux.big_m1 = Some(e_i + e_b);
            aux.big_m2 = Some(e_i * e_b - p.xi * p.beta2 * s / p.k2);
        }
        SteadyTag::Z3 => aux.cubic = Some(z3_cubic(z, p, &unit, 0.0)),
        _ => {
            let c = endemic_cubic(z, p, &unit, 0.0);
            aux.l0 = Some(endemic_blocks(z, p).0);
            aux.p0 = Some(c.p);
            aux.q0 = Some(c.q);
            aux.h0 = Some(c.h);
        }
    }
    aux
}

/// Smallest `lambda` beyond which all Gershgorin discs (rows, or columns,
/// whichever certifies earlier) of `J - lambda A` have negative real part.
pub fn gershgorin_threshold(j: &Jacobian4, a: &DiffusionMatrix) -> f64 {
    let d = a.diag();
    let m = &j.entries;
    let mut rows = 0.0_f64;
    let mut cols = 0.0_f64;
    for i in 0..SPECIES {
        let r: f64 = (0..SPECIES).filter(|&k| k != i).map(|k| m[i][k].abs()).sum();
        let c: f64 = (0..SPECIES).filter(|&k| k != i).map(|k| m[k][i].abs()).sum();
        rows = rows.max((m[i][i] + r) / d[i]);
        cols = cols.max((m[i][i] + c) / d[i]);
    }
    rows.min(cols).max(0.0)
}

fn tail_check(j: &Jacobian4, a: &DiffusionMatrix, lambdas: &[(usize, f64)]) -> TailCheck {
    let lambda_threshold = gershgorin_threshold(j, a);
    let lambda_max_listed = lambdas.iter().map(|&(_, l)| l).fold(0.0, f64::max);
    TailCheck {
        lambda_threshold,
        lambda_max_listed,
        covered: lambda_max_listed >= lambda_threshold,
    }
}

/// Greedy nearest matching distance between two root lists.
fn match_distance(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    let mut used = [false; 4];
    let mut worst = 0.0_f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .expect("four candidates");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

mod complex_triple {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &[Complex64; 3], s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 3], D::Error> {
        let v = <[[f64; 2]; 3]>::deserialize(d)?;
        Ok(v.map(|[re, im]| Complex64::new(re, im)))
    }
}

//! Cell-centered rectangular grids with zero-flux (Neumann) boundaries.
//!
//! Cells are stored with the x index running fastest. The diffusion operator
//! is the flux form `div(a grad u)`: each interior face carries
//! `a_face (u_R - u_L) / h` with `a_face` the arithmetic mean of the two
//! adjacent cell coefficients, and boundary faces carry no flux.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
}

/// Serialized form of a [`Grid`]: one entry per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Grid> {
        Grid::new(&spec.lengths, &spec.cells)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> GridSpec {
        GridSpec {
            lengths: g.lengths[..g.dim].to_vec(),
            cells: g.cells[..g.dim].to_vec(),
        }
    }
}

impl Grid {
    pub fn new(lengths: &[f64], cells: &[usize]) -> Result<Grid> {
        let dim = lengths.len();
        if !(1..=2).contains(&dim) || cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected 1 or 2 axes with matching lengths/cells, got {} lengths and {} cell counts",
                lengths.len(),
                cells.len()
            )));
        }
        let mut g = Grid {
            dim,
            lengths: [1.0; 2],
            cells: [1; 2],
        };
        for k in 0..dim {
            if !(lengths[k].is_finite() && lengths[k] > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {k} length must be positive, got {}", lengths[k])));
            }
            if cells[k] < MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} needs at least {MIN_CELLS} cells, got {}",
                    cells[k]
                )));
            }
            g.lengths[k] = lengths[k];
            g.cells[k] = cells[k];
        }
        Ok(g)
    }

    pub fn new_1d(length: f64, cells: usize) -> Result<Grid> {
        Grid::new(&[length], &[cells])
    }

    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Grid> {
        Grid::new(&[lx, ly], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing(k)).product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Cell-center coordinates; the second entry is 0 on 1D grids.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let ix = idx % self.cells[0];
        let iy = idx / self.cells[0];
        let x = (ix as f64 + 0.5) * self.spacing(0);
        let y = if self.dim == 2 {
            (iy as f64 + 0.5) * self.spacing(1)
        } else {
            0.0
        };
        [x, y]
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.len(),
                found: n,
            })
        }
    }

    /// Writes `div(a grad u)` into `out`. Fixed summation order per cell, so
    /// mirror-symmetric inputs give bitwise mirror-symmetric output.
    pub(crate) fn diffuse(&self, u: &[f64], a: &[f64], out: &mut [f64]) {
        let nx = self.cells[0];
        let ny = self.cells[1];
        let hx = self.spacing(0);
        let flux_x = |l: usize, r: usize| 0.5 * (a[l] + a[r]) * (u[r] - u[l]) / hx;
        for iy in 0..ny {
            let row = iy * nx;
            for ix in 0..nx {
                let c = row + ix;
                let right = if ix + 1 < nx { flux_x(c, c + 1) } else { 0.0 };
                let left = if ix > 0 { flux_x(c - 1, c) } else { 0.0 };
                out[c] = (right - left) / hx;
            }
        }
        if self.dim == 2 {
            let hy = self.spacing(1);
            let flux_y = |l: usize, r: usize| 0.5 * (a[l] + a[r]) * (u[r] - u[l]) / hy;
            for iy in 0..ny {
                for ix in 0..nx {
                    let c = iy * nx + ix;
                    let up = if iy + 1 < ny { flux_y(c, c + nx) } else { 0.0 };
                    let down = if iy > 0 { flux_y(c - nx, c) } else { 0.0 };
                    out[c] += (up - down) / hy;
                }
            }
        }
    }
}

/// Analytic spatial profiles for diffusion coefficients or local rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant(f64),
    /// One value per cell, in grid storage order.
    Samples(Vec<f64>),
    /// `mean (1 + amplitude cos(pi x / L))` along `axis`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
    },
    /// Linear ramp from `start` at x = 0 to `end` at x = L along `axis`.
    Linear {
        start: f64,
        end: f64,
        #[serde(default)]
        axis: usize,
    },
    /// Spatially uniform `mean (1 + amplitude sin(2 pi t / period))`.
    Pulsing {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
}

/// A positive coefficient field `a(x, t)` with known bounds `0 < a0 <= a <= A0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientSpec", into = "CoefficientSpec")]
pub struct CoefficientField {
    spec: CoefficientSpec,
    lower: f64,
    upper: f64,
}

impl From<CoefficientField> for CoefficientSpec {
    fn from(c: CoefficientField) -> CoefficientSpec {
        c.spec
    }
}

impl TryFrom<CoefficientSpec> for CoefficientField {
    type Error = Error;

    fn try_from(spec: CoefficientSpec) -> Result<CoefficientField> {
        let bad = |m: String| Err(Error::CoefficientBounds(m));
        let (lower, upper) = match &spec {
            CoefficientSpec::Constant(v) => (*v, *v),
            CoefficientSpec::Samples(vs) => {
                if vs.is_empty() {
                    return bad("empty sample list".into());
                }
                if vs.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite sample".into());
                }
                let lo = vs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            CoefficientSpec::Cosine { mean, amplitude, .. }
            | CoefficientSpec::Pulsing { mean, amplitude, .. } => {
                if !(amplitude.abs() < 1.0) {
                    return bad(format!("profile amplitude must satisfy |amplitude| < 1, got {amplitude}"));
                }
                (mean * (1.0 - amplitude.abs()), mean * (1.0 + amplitude.abs()))
            }
            CoefficientSpec::Linear { start, end, .. } => (start.min(*end), start.max(*end)),
        };
        if let CoefficientSpec::Pulsing { period, .. } = &spec {
            if !(period.is_finite() && *period > 0.0) {
                return bad(format!("pulsing period must be positive, got {period}"));
            }
        }
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0) {
            return bad(format!("coefficient must be bounded below by a positive constant, got range [{lower}, {upper}]"));
        }
        Ok(CoefficientField { spec, lower, upper })
    }
}

impl CoefficientField {
    pub fn constant(v: f64) -> Result<CoefficientField> {
        CoefficientSpec::Constant(v).try_into()
    }

    pub fn samples(values: Vec<f64>) -> Result<CoefficientField> {
        CoefficientSpec::Samples(values).try_into()
    }

    pub fn profile(spec: CoefficientSpec) -> Result<CoefficientField> {
        spec.try_into()
    }

    pub fn spec(&self) -> &CoefficientSpec {
        &self.spec
    }

    /// Lower bound `a0`.
    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    /// Upper bound `A0`.
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// The constant value, if the field is spatially and temporally uniform.
    pub fn as_constant(&self) -> Option<f64> {
        match self.spec {
            CoefficientSpec::Constant(v) => Some(v),
            _ => None,
        }
    }

    /// Whether the field changes with time.
    pub fn is_time_dependent(&self) -> bool {
        matches!(self.spec, CoefficientSpec::Pulsing { .. })
    }

    /// Per-cell values at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        let n = grid.len();
        let check_axis = |axis: usize| {
            if axis < grid.dim() {
                Ok(())
            } else {
                Err(Error::InvalidGrid(format!("profile axis {axis} on a {}D grid", grid.dim())))
            }
        };
        Ok(match &self.spec {
            CoefficientSpec::Constant(v) => vec![*v; n],
            CoefficientSpec::Samples(vs) => {
                grid.check(vs.len())?;
                vs.clone()
            }
            CoefficientSpec::Cosine { mean, amplitude, axis } => {
                check_axis(*axis)?;
                let l = grid.lengths[*axis];
                (0..n)
                    .map(|i| mean * (1.0 + amplitude * (PI * grid.center(i)[*axis] / l).cos()))
                    .collect()
            }
            CoefficientSpec::Linear { start, end, axis } => {
                check_axis(*axis)?;
                let l = grid.lengths[*axis];
                (0..n)
                    .map(|i| start + (end - start) * grid.center(i)[*axis] / l)
                    .collect()
            }
            CoefficientSpec::Pulsing { mean, amplitude, period } => {
                vec![mean * (1.0 + amplitude * (2.0 * PI * t / period).sin()); n]
            }
        })
    }

    pub fn write_csv<W: Write>(&self, grid: &Grid, t: f64, w: W) -> io::Result<()> {
        let values = self
            .sample(grid, t)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        write_fields_csv(grid, &[("a", &values)], w)
    }
}

/// Per-cell scalar values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<ScalarField> {
        grid.check(values.len())?;
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, v: f64) -> ScalarField {
        ScalarField {
            grid,
            values: vec![v; grid.len()],
        }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `sum |u| dV`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `sum u dV`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_fields_csv(&self.grid, &[("value", &self.values)], w)
    }
}

/// Writes one CSV row per cell: cell-center coordinates followed by the named
/// columns, all numbers with 17 significant digits.
pub fn write_fields_csv<W: Write>(grid: &Grid, columns: &[(&str, &[f64])], mut w: W) -> io::Result<()> {
    let mut header = String::from("x");
    if grid.dim() == 2 {
        header.push_str(",y");
    }
    for (name, values) in columns {
        if values.len() != grid.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("column {name} has wrong length")));
        }
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for i in 0..grid.len() {
        let c = grid.center(i);
        let mut line = fmt_f64(c[0]);
        if grid.dim() == 2 {
            line.push(',');
            line.push_str(&fmt_f64(c[1]));
        }
        for (_, values) in columns {
            line.push(',');
            line.push_str(&fmt_f64(values[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Shortest exponent form that parses back to the same double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// `div(a grad u)` for a coefficient field sampled at time `t`.
pub fn apply_diffusion(u: &ScalarField, a: &CoefficientField, t: f64) -> Result<ScalarField> {
    let grid = u.grid;
    let coeff = a.sample(&grid, t)?;
    let mut out = vec![0.0; grid.len()];
    grid.diffuse(&u.values, &coeff, &mut out);
    Ok(ScalarField { grid, values: out })
}

/// One Neumann eigenpair of `-Laplacian` on the grid's rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    pub lambda: f64,
    /// Cosine wave numbers per axis.
    pub wave: [usize; 2],
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    grid: Grid,
    modes: Vec<Mode>,
}

impl ModeSpectrum {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Inner product of `u` with the L2-normalized eigenfunction of mode `j`.
    pub fn project(&self, u: &ScalarField, j: usize) -> Result<f64> {
        let mode = self.modes.get(j).ok_or_else(|| Error::ModeOutOfRange {
            index: j,
            reason: format!("spectrum holds {} modes", self.modes.len()),
        })?;
        if u.grid != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                found: u.grid.len(),
            });
        }
        let profile = eigenfunction(&self.grid, mode.wave)?;
        let dv = self.grid.cell_volume();
        Ok(u.values.iter().zip(&profile).map(|(a, b)| a * b).sum::<f64>() * dv)
    }
}

/// L2-normalized cosine eigenfunction with the given wave numbers, sampled at
/// cell centers.
pub fn eigenfunction(grid: &Grid, wave: [usize; 2]) -> Result<Vec<f64>> {
    for k in 0..grid.dim() {
        if wave[k] >= grid.cells[k] {
            return Err(Error::ModeOutOfRange {
                index: wave[k],
                reason: format!("axis {k} resolves wave numbers below {}", grid.cells[k]),
            });
        }
    }
    let norm: f64 = (0..grid.dim())
        .map(|k| {
            let l = grid.lengths[k];
            if wave[k] == 0 {
                (1.0 / l).sqrt()
            } else {
                (2.0 / l).sqrt()
            }
        })
        .product();
    Ok((0..grid.len())
        .map(|i| {
            let c = grid.center(i);
            let mut v = norm;
            for k in 0..grid.dim() {
                v *= (wave[k] as f64 * PI * c[k] / grid.lengths[k]).cos();
            }
            v
        })
        .collect())
}

/// The first `count` Neumann Laplacian eigenvalues, nondecreasing, with
/// multiplicity. Index 0 is the constant mode with eigenvalue 0.
pub fn neumann_modes(grid: &Grid, count: usize) -> Result<ModeSpectrum> {
    if count < 1 {
        return Err(Error::InvalidConfig("mode count must be at least 1".into()));
    }
    let k = |j: usize, axis: usize| {
        let w = j as f64 * PI / grid.lengths[axis];
        w * w
    };
    let mut candidates: Vec<(f64, [usize; 2])> = if grid.dim() == 1 {
        (0..count).map(|j| (k(j, 0), [j, 0])).collect()
    } else {
        let mut v = Vec::with_capacity(count * count);
        for jy in 0..count {
            for jx in 0..count {
                v.push((k(jx, 0) + k(jy, 1), [jx, jy]));
            }
        }
        v
    };
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1[1].cmp(&b.1[1]))
            .then(a.1[0].cmp(&b.1[0]))
    });
    candidates.truncate(count);
    let modes = candidates
        .into_iter()
        .enumerate()
        .map(|(index, (lambda, wave))| {
            let description = if grid.dim() == 1 {
                format!("cos({} pi x / {})", wave[0], grid.lengths[0])
            } else {
                format!(
                    "cos({} pi x / {}) cos({} pi y / {})",
                    wave[0], grid.lengths[0], wave[1], grid.lengths[1]
                )
            };
            Mode {
                index,
                lambda,
                wave,
                description,
            }
        })
        .collect();
    Ok(ModeSpectrum { grid: *grid, modes })
}

/// Projection of `u` onto mode `j` of the grid's Neumann spectrum.
pub fn project_mode(u: &ScalarField, j: usize) -> Result<f64> {
    neumann_modes(u.grid(), j + 1)?.project(u, j)
}

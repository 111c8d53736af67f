//! Parameter sweeps over a base scenario.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sirb_core::grid::{fmt_f64, CoefficientField};
use sirb_core::linalg::Verdict;
use sirb_core::model::ModelParams;
use sirb_core::stability::{classify_state, StabilityReport};
use sirb_core::steady_state::{endemic_exists, solve_endemic, trivial_states, SteadyTag};

use crate::commands::{create_dir, to_json, unix_time, write_atomic, write_file};
use crate::error::{CliError, Result};
use crate::scenario::Scenario;

pub const MAX_POINTS: usize = 100_000;

/// Diffusion rates that may be swept besides the model parameters.
const DIFFUSION_AXES: [&str; 4] = ["a1", "a2", "a3", "a4"];

const STATES: [&str; 4] = ["Z1", "Z2", "Z3", "Z4"];
const STATE_FIELDS: [&str; 4] = ["exists", "overall", "turing", "max_re0"];
const GLOBAL_FIELDS: [&str; 4] = ["endemic_exists", "endemic_count", "any_turing", "any_unstable_overall"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: Scenario,
    #[serde(default)]
    pub axes: Vec<Axis>,
    /// Columns to tabulate; every known column when empty.
    #[serde(default)]
    pub outputs: Vec<String>,
}

/// Every column name a sweep can produce.
pub fn known_outputs() -> Vec<String> {
    let mut v: Vec<String> = GLOBAL_FIELDS.iter().map(|s| s.to_string()).collect();
    for s in STATES {
        for f in STATE_FIELDS {
            v.push(format!("{s}.{f}"));
        }
    }
    v
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<SweepSpec> {
        let s: SweepSpec = crate::scenario::load_json(path)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let mut total: usize = 1;
        for axis in &self.axes {
            let known = ModelParams::FIELDS.contains(&axis.param.as_str())
                || DIFFUSION_AXES.contains(&axis.param.as_str());
            if !known {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter `{}` (expected a model parameter or a1..a4)",
                    axis.param
                )));
            }
            if axis.values.is_empty() {
                return Err(CliError::Config(format!("axis `{}` has no values", axis.param)));
            }
            total = total.saturating_mul(axis.values.len());
        }
        if total > MAX_POINTS {
            return Err(CliError::Config(format!("{total} sweep points exceed the limit of {MAX_POINTS}")));
        }
        let known = known_outputs();
        for o in &self.outputs {
            if !known.contains(o) {
                return Err(CliError::Config(format!("unknown sweep output `{o}`")));
            }
        }
        Ok(())
    }

    pub fn outputs(&self) -> Vec<String> {
        if self.outputs.is_empty() {
            known_outputs()
        } else {
            self.outputs.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of point `k`; the first axis varies slowest.
    pub fn point(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = axis.values[k % n];
            k /= n;
        }
        out
    }
}

/// One evaluated sweep point. Cells are preformatted CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axes: Vec<f64>,
    pub cells: Vec<String>,
    pub error: Option<String>,
}

fn scenario_at(spec: &SweepSpec, values: &[f64]) -> Result<Scenario> {
    let mut s = spec.base.clone();
    for (axis, &v) in spec.axes.iter().zip(values) {
        if let Some(i) = DIFFUSION_AXES.iter().position(|n| *n == axis.param) {
            s.diffusion[i] = CoefficientField::constant(v)?;
        } else {
            s.params = s.params.with(&axis.param, v)?;
        }
    }
    Ok(s)
}

struct PointResult {
    endemic_exists: bool,
    endemic_count: Option<usize>,
    reports: [Option<StabilityReport>; 4],
    exists: [bool; 4],
    /// Set when the endemic search failed; the other columns stay valid.
    note: Option<String>,
}

fn evaluate(s: &Scenario, modes: Option<usize>) -> Result<PointResult> {
    let p = &s.params;
    let a = s.diffusion_matrix()?;
    let spectrum = s.spectrum(modes)?;
    let (exists_flag, _) = endemic_exists(p);
    let mut states: [Option<sirb_core::steady_state::SteadyState>; 4] = Default::default();
    for z in trivial_states(p) {
        let k = match z.tag {
            SteadyTag::Z1 => 0,
            SteadyTag::Z2 => 1,
            _ => 2,
        };
        states[k] = Some(z);
    }
    // A failed endemic search leaves the other columns usable.
    let (endemic, endemic_count, note) = match solve_endemic(p) {
        Ok(v) => {
            let n = v.len();
            (v, Some(n), None)
        }
        Err(e @ sirb_core::Error::BracketFailure { .. }) => (Vec::new(), None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    states[3] = endemic.into_iter().next();
    let mut reports: [Option<StabilityReport>; 4] = Default::default();
    for (slot, z) in reports.iter_mut().zip(&states) {
        if let Some(z) = z {
            *slot = Some(classify_state(z, p, &a, &spectrum)?);
        }
    }
    Ok(PointResult {
        endemic_exists: exists_flag,
        endemic_count,
        exists: std::array::from_fn(|k| states[k].is_some()),
        reports,
        note,
    })
}

fn cell(result: &PointResult, name: &str) -> String {
    let b = |v: bool| if v { "true" } else { "false" }.to_string();
    match name {
        "endemic_exists" => b(result.endemic_exists),
        "endemic_count" => result.endemic_count.map(|c| c.to_string()).unwrap_or_default(),
        "any_turing" => b(result.reports.iter().flatten().any(|r| r.turing)),
        "any_unstable_overall" => b(result.reports.iter().flatten().any(|r| r.overall == Verdict::Unstable)),
        _ => {
            let (state, field) = name.split_once('.').expect("validated output name");
            let k = STATES.iter().position(|s| *s == state).expect("validated state");
            if field == "exists" {
                return b(result.exists[k]);
            }
            match &result.reports[k] {
                None => String::new(),
                Some(r) => match field {
                    "overall" => r.overall.as_str().to_string(),
                    "turing" => b(r.turing),
                    "max_re0" => fmt_f64(r.mode_zero().max_real_part),
                    _ => unreachable!("validated field"),
                },
            }
        }
    }
}

fn run_point(spec: &SweepSpec, outputs: &[String], k: usize, modes: Option<usize>) -> Row {
    let axes = spec.point(k);
    let result = scenario_at(spec, &axes).and_then(|s| {
        s.validate()?;
        evaluate(&s, modes)
    });
    match result {
        Ok(r) => Row {
            axes,
            cells: outputs.iter().map(|o| cell(&r, o)).collect(),
            error: r.note,
        },
        Err(e) => {
            // A failed existence test still has a meaningful flag.
            let cells = outputs
                .iter()
                .map(|o| match o.as_str() {
                    "endemic_exists" => scenario_at(spec, &axes)
                        .map(|s| endemic_exists(&s.params).0.to_string())
                        .unwrap_or_default(),
                    _ => String::new(),
                })
                .collect();
            Row {
                axes,
                cells,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Evaluates every point, on `jobs` threads when given. Row order does not
/// depend on the thread count.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>, modes: Option<usize>) -> Result<Vec<Row>> {
    spec.validate()?;
    let outputs = spec.outputs();
    let n = spec.len();
    let work = || -> Vec<Row> {
        (0..n)
            .into_par_iter()
            .map(|k| run_point(spec, &outputs, k, modes))
            .collect()
    };
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {j} worker threads: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn csv_escape(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub fn table_csv(spec: &SweepSpec, rows: &[Row]) -> String {
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.param.clone()).collect();
    header.extend(spec.outputs());
    header.push("error".into());
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut fields: Vec<String> = row.axes.iter().map(|v| fmt_f64(*v)).collect();
        fields.extend(row.cells.iter().cloned());
        fields.push(row.error.as_deref().map(csv_escape).unwrap_or_default());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub scenario: String,
    pub created_unix: u64,
    pub points: usize,
    pub failed_points: usize,
    pub spec: SweepSpec,
}

/// Runs the sweep and writes `sweep.csv` (atomically) and `meta.json`.
pub fn cmd_sweep(spec: &SweepSpec, out: &Path, jobs: Option<usize>, modes: Option<usize>) -> Result<SweepMeta> {
    let rows = run_sweep(spec, jobs, modes)?;
    create_dir(out)?;
    write_atomic(&out.join("sweep.csv"), table_csv(spec, &rows).as_bytes())?;
    let meta = SweepMeta {
        scenario: spec.base.name.clone(),
        created_unix: unix_time(),
        points: rows.len(),
        failed_points: rows.iter().filter(|r| r.error.is_some()).count(),
        spec: spec.clone(),
    };
    write_file(&out.join("meta.json"), to_json(&meta).as_bytes())?;
    Ok(meta)
}

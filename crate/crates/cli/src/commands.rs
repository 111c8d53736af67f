//! The `simulate`, `steady` and `stability` workflows.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sirb_core::grid::ModeSpectrum;
use sirb_core::integrator::{simulate_partial, SimConfig, Violation};
use sirb_core::model::ModelParams;
use sirb_core::stability::{classify_state, StabilityReport};
use sirb_core::steady_state::{
    endemic_exists, scan_branch_intersections, select_state, solve_endemic_detailed, trivial_states,
    EndemicDiagnostics, SteadyState,
};

use crate::error::{CliError, Result};
use crate::scenario::Scenario;

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write_file(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub(crate) fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Contents of `meta.json` for a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub scenario: String,
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub created_unix: u64,
    pub status: String,
    pub error: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub mass_decay_expected: bool,
    pub violations: Vec<Violation>,
    pub snapshots: Vec<String>,
    pub config: SimConfig,
}

/// Runs the scenario and writes `trajectory.csv`, `final_state.csv`,
/// `snapshots/*.csv` and `meta.json` into `out`. Artifacts are written even
/// when the run fails; the error is returned afterwards.
pub fn cmd_simulate(scenario: &Scenario, out: &Path, seed: Option<u64>) -> Result<SimulationMeta> {
    let cfg = scenario.sim_config(seed)?;
    create_dir(out)?;
    let (traj, error) = simulate_partial(&cfg);
    let Some(traj) = traj else {
        return Err(error.expect("no trajectory without an error").into());
    };

    let mut buf = Vec::new();
    traj.write_csv(&mut buf).expect("writing to memory");
    write_file(&out.join("trajectory.csv"), &buf)?;
    buf.clear();
    traj.final_state.write_csv(&mut buf).expect("writing to memory");
    write_file(&out.join("final_state.csv"), &buf)?;

    let mut snapshots = Vec::new();
    if !traj.snapshots.is_empty() {
        let dir = out.join("snapshots");
        create_dir(&dir)?;
        for (k, s) in traj.snapshots.iter().enumerate() {
            let name = format!("snapshots/snapshot_{k:04}.csv");
            buf.clear();
            s.write_csv(&mut buf).expect("writing to memory");
            write_file(&out.join(&name), &buf)?;
            snapshots.push(name);
        }
    }

    let failed = error.is_some() || !traj.violations.is_empty();
    let meta = SimulationMeta {
        scenario: scenario.name.clone(),
        created_unix: unix_time(),
        status: if failed { "failed" } else { "ok" }.into(),
        error: error.as_ref().map(|e| e.to_string()),
        steps: traj.steps,
        final_time: traj.final_state.t(),
        mass_decay_expected: traj.mass_decay_expected,
        violations: traj.violations.clone(),
        snapshots,
        config: cfg,
    };
    write_file(&out.join("meta.json"), to_json(&meta).as_bytes())?;
    match (error, traj.violations.first()) {
        (Some(e), _) => Err(e.into()),
        (None, Some(v)) => Err(CliError::Failed(format!(
            "invariant violated at t = {} (step {}): {}",
            v.time, v.step, v.detail
        ))),
        (None, None) => Ok(meta),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyReport {
    pub scenario: String,
    pub params: ModelParams,
    pub trivial: Vec<SteadyState>,
    pub endemic: EndemicDiagnostics,
    pub endemic_states: Vec<SteadyState>,
    /// Set when the existence test passes but no endemic state is found.
    pub endemic_error: Option<String>,
}

impl SteadyReport {
    pub fn all_states(&self) -> impl Iterator<Item = &SteadyState> {
        self.trivial.iter().chain(&self.endemic_states)
    }
}

pub fn steady_report(scenario: &Scenario) -> Result<SteadyReport> {
    let p = &scenario.params;
    let trivial = trivial_states(p);
    let (endemic, endemic_states, endemic_error) = match solve_endemic_detailed(p) {
        Ok(sol) => {
            let mut diag = sol.diagnostics;
            // The test can miss equilibria; show what an unconditional scan finds.
            if !diag.exists {
                diag.branch_intersections = scan_branch_intersections(p)?;
            }
            (diag, sol.states, None)
        }
        Err(e @ sirb_core::Error::BracketFailure { .. }) => {
            let (_, mut diag) = endemic_exists(p);
            diag.branch_intersections = scan_branch_intersections(p)?;
            (diag, Vec::new(), Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(SteadyReport {
        scenario: scenario.name.clone(),
        params: *p,
        trivial,
        endemic,
        endemic_states,
        endemic_error,
    })
}

pub fn cmd_steady(scenario: &Scenario) -> Result<String> {
    Ok(to_json(&steady_report(scenario)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityOutput {
    pub scenario: String,
    pub lambdas: Vec<f64>,
    pub reports: Vec<StabilityReport>,
    pub endemic_error: Option<String>,
}

pub fn stability_output(scenario: &Scenario, modes: Option<usize>) -> Result<StabilityOutput> {
    let a = scenario.diffusion_matrix()?;
    let spectrum: ModeSpectrum = scenario.spectrum(modes)?;
    let steady = steady_report(scenario)?;
    let states: Vec<SteadyState> = match &scenario.analysis.states {
        Some(list) => {
            let mut v = Vec::with_capacity(list.len());
            for which in list {
                v.push(select_state(&scenario.params, *which)?);
            }
            v
        }
        None => steady.all_states().cloned().collect(),
    };
    let mut reports = Vec::with_capacity(states.len());
    for z in &states {
        reports.push(classify_state(z, &scenario.params, &a, &spectrum)?);
    }
    Ok(StabilityOutput {
        scenario: scenario.name.clone(),
        lambdas: spectrum.lambdas(),
        reports,
        endemic_error: steady.endemic_error,
    })
}

pub fn cmd_stability(scenario: &Scenario, modes: Option<usize>) -> Result<String> {
    Ok(to_json(&stability_output(scenario, modes)?))
}

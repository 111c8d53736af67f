//! JSON scenario files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sirb_core::grid::{neumann_modes, CoefficientField, Grid, ModeSpectrum};
use sirb_core::integrator::{InitialCondition, RateOverrides, SimConfig, StepControl, CG_REL_TOL};
use sirb_core::model::{ModelParams, SPECIES};
use sirb_core::stability::DiffusionMatrix;
use sirb_core::steady_state::StateSelector;

use crate::error::{CliError, Result};

pub const DEFAULT_MODES: usize = 32;

fn one() -> usize {
    1
}

fn cg_tolerance() -> f64 {
    CG_REL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub t_end: f64,
    pub step: StepControl,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub record_modes: Vec<usize>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "cg_tolerance")]
    pub cg_tolerance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Number of Neumann modes for stability; `--modes` overrides it.
    #[serde(default)]
    pub modes: Option<usize>,
    /// Equilibria to analyze; all that exist when absent.
    #[serde(default)]
    pub states: Option<Vec<StateSelector>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub grid: Grid,
    pub diffusion: [CoefficientField; SPECIES],
    #[serde(default)]
    pub rates: RateOverrides,
    pub initial: InitialCondition,
    pub run: RunSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// Reads and parses a JSON file, keeping serde's line/column diagnostics.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let s: Scenario = load_json(path)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config(None)?;
        if let Some(0) = self.analysis.modes {
            return Err(CliError::Config("analysis.modes must be at least 1".into()));
        }
        Ok(())
    }

    /// The integrator configuration; `seed` replaces the seed of a random
    /// initial profile.
    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig> {
        let mut initial = self.initial.clone();
        if let (Some(s), InitialCondition::Random { seed, .. }) = (seed, &mut initial) {
            *seed = s;
        }
        let cfg = SimConfig {
            grid: self.grid,
            params: self.params,
            diffusion: self.diffusion.clone(),
            rates: self.rates.clone(),
            initial,
            t_end: self.run.t_end,
            step: self.run.step,
            record_every: self.run.record_every,
            record_modes: self.run.record_modes.clone(),
            snapshot_times: self.run.snapshot_times.clone(),
            cg_tolerance: self.run.cg_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Constant diffusion rates; stability analysis needs them.
    pub fn diffusion_matrix(&self) -> Result<DiffusionMatrix> {
        if self.rates.b0.is_some() || self.rates.g0.is_some() {
            return Err(CliError::Config(
                "stability analysis needs constant growth rates; remove `rates`".into(),
            ));
        }
        let mut a = [0.0; SPECIES];
        for (i, c) in self.diffusion.iter().enumerate() {
            a[i] = c.as_constant().ok_or_else(|| {
                CliError::Config(format!("stability analysis needs constant diffusion; a{} is not constant", i + 1))
            })?;
        }
        Ok(DiffusionMatrix::new(a)?)
    }

    pub fn spectrum(&self, modes: Option<usize>) -> Result<ModeSpectrum> {
        let n = modes.or(self.analysis.modes).unwrap_or(DEFAULT_MODES);
        Ok(neumann_modes(&self.grid, n)?)
    }
}

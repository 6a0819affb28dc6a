//! Scenario files: one TOML document per run.

use std::path::Path;

use degflow::diagnostics::MonitorOptions;
use degflow::experiments::{Experiment, ExperimentInput, InitialCondition};
use degflow::stepper::{RunOptions, StepperConfig};
use degflow::{Grid, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cells: vec![64],
            lengths: vec![1.0],
        }
    }
}

fn default_t_final() -> f64 {
    1.0
}

fn default_cadence() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_max_steps() -> usize {
    10_000_000
}

fn default_initial() -> InitialCondition {
    InitialCondition::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// The result of the theory this scenario exercises.
    #[serde(default)]
    pub anchor: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Accepted steps between records.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "default_true")]
    pub mollify: bool,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    pub model: ModelParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub monitor: MonitorOptions,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
    pub experiment: Experiment,
}

impl Scenario {
    pub fn from_toml(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads a scenario file; relative initial-data paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let mut sc = Self::from_toml(&text, &path.display().to_string())?;
        if let InitialCondition::File { path: data } = &mut sc.initial {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Validates every section and assembles the experiment input.
    pub fn resolve(&self) -> CliResult<ExperimentInput> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(invalid("name", "must be a non-empty file-name-safe string"));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(invalid("t_final", "must be positive and finite"));
        }
        if self.cadence == 0 {
            return Err(invalid("cadence", "must be at least 1"));
        }
        self.model.validate()?;
        self.stepper.validate()?;
        let grid = Grid::new(&self.grid.cells, &self.grid.lengths)?;
        if let degflow::Forcing::Field(v) = &self.model.g {
            if v.len() != grid.len() {
                return Err(invalid("g", format!("field has {} values for {} cells", v.len(), grid.len())));
            }
        }
        let mut run = RunOptions::new(self.t_final);
        run.cadence = self.cadence;
        run.mollify = self.mollify;
        run.max_steps = self.max_steps;
        run.monitor = self.monitor.clone();
        Ok(ExperimentInput {
            name: self.name.clone(),
            model: self.model.clone(),
            grid,
            stepper: self.stepper.clone(),
            initial: self.initial.clone(),
            run,
            seed: self.seed,
        })
    }
}

fn invalid(field: &'static str, constraint: impl Into<String>) -> CliError {
    CliError::Core(degflow::Error::InvalidParameter {
        field,
        constraint: constraint.into(),
    })
}

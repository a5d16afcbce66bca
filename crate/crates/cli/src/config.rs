use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use supercsp::branching::ReplicaConfig;
use supercsp::csp::{Fixture, ScenarioSpec};
use supercsp::generator::{ExitTimeOptions, RadialFunction};
use supercsp::pde::{ComparisonFunction, MaximalOptions, SampleGrid, SolverParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Classify,
    MaximalSolution,
    Hitting,
    ParticleMc,
    DualityCheck,
    GwOracle,
    ResidualCheck,
    Explosion,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::MaximalSolution => "maximal-solution",
            Experiment::Hitting => "hitting",
            Experiment::ParticleMc => "particle-mc",
            Experiment::DualityCheck => "duality-check",
            Experiment::GwOracle => "gw-oracle",
            Experiment::ResidualCheck => "residual-check",
            Experiment::Explosion => "explosion",
        }
    }

    fn needs_scenario(self) -> bool {
        !matches!(self, Experiment::GwOracle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GwParams {
    /// Generations of the survival recursion.
    pub k: usize,
    /// Generations sampled by Monte Carlo.
    pub ks: Vec<usize>,
    pub trees: usize,
    /// Generation of the conditioned sample; 0 skips it.
    pub conditioned_n: usize,
    pub conditioned_samples: usize,
}

impl Default for GwParams {
    fn default() -> Self {
        GwParams {
            k: 100_000,
            ks: vec![1, 5, 10, 50],
            trees: 100_000,
            conditioned_n: 200,
            conditioned_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualityParams {
    pub test_function: RadialFunction,
    /// Outer radius of the PDE domain, where `u = 0`.
    pub radius: f64,
    pub solver: SolverParams,
}

impl Default for DualityParams {
    fn default() -> Self {
        DualityParams {
            test_function: RadialFunction::Hat { height: 1.0, width: 1.0 },
            radius: 10.0,
            solver: SolverParams { fixed_dt: Some(1e-3), ..SolverParams::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HittingParams {
    pub r_mu: f64,
    pub mass: f64,
    pub t_end: f64,
}

impl Default for HittingParams {
    fn default() -> Self {
        HittingParams { r_mu: 1.0, mass: 1.0, t_end: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualParams {
    pub functions: Vec<ComparisonFunction>,
    pub grid: SampleGrid,
}

impl Default for ResidualParams {
    fn default() -> Self {
        ResidualParams {
            functions: vec![ComparisonFunction::StationaryW { kappa: 1.0, p: 2.0, d: 3 }],
            grid: SampleGrid::uniform(0.1, 10.0, 200, 0.0, 1.0, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplosionParams {
    pub r0: f64,
    /// Defaults to `10 max(1, r0) 2^k` up to `1e8`.
    pub truncations: Option<Vec<f64>>,
    pub options: ExitTimeOptions,
}

impl Default for ExplosionParams {
    fn default() -> Self {
        ExplosionParams { r0: 0.0, truncations: None, options: ExitTimeOptions::default() }
    }
}

/// Numerical parameters, one section per engine.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub maximal: MaximalOptions,
    pub replicas: ReplicaConfig,
    pub gw: GwParams,
    pub duality: DualityParams,
    pub hitting: HittingParams,
    pub residual: ResidualParams,
    pub explosion: ExplosionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Output subdirectory; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            name: None,
            scenario: None,
            numerics: Numerics::default(),
            seed: 0,
            output_dir: None,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.experiment.needs_scenario() && self.scenario.is_none() {
            return Err(CliError::Invalid {
                key: "scenario".into(),
                constraint: "required for this experiment".into(),
            });
        }
        if let Some(s) = &self.scenario {
            s.validate().map_err(|e| CliError::Invalid { key: "scenario".into(), constraint: e.to_string() })?;
        }
        let n = &self.numerics;
        n.maximal
            .solver
            .validate()
            .map_err(|e| CliError::Invalid { key: "numerics.maximal.solver".into(), constraint: e.to_string() })?;
        n.duality
            .solver
            .validate()
            .map_err(|e| CliError::Invalid { key: "numerics.duality.solver".into(), constraint: e.to_string() })?;
        let positive = |key: &str, v: f64| -> CliResult<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Invalid { key: key.into(), constraint: format!("{v} must be positive and finite") })
            }
        };
        positive("numerics.duality.radius", n.duality.radius)?;
        positive("numerics.hitting.t_end", n.hitting.t_end)?;
        positive("numerics.replicas.t_end", n.replicas.t_end)?;
        if n.replicas.replicas == 0 {
            return Err(CliError::Invalid {
                key: "numerics.replicas.replicas".into(),
                constraint: "must be at least 1".into(),
            });
        }
        if n.gw.k == 0 || n.gw.trees == 0 {
            return Err(CliError::Invalid {
                key: "numerics.gw".into(),
                constraint: "k and trees must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Several experiments run from one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bundle {
    pub experiments: Vec<ExperimentConfig>,
}

/// Input of `compare`: a fixture set and the numerics for each engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Include the built-in fixture set.
    pub builtin: bool,
    /// Restrict to these fixture names; empty keeps all.
    pub only: Vec<String>,
    pub fixtures: Vec<Fixture>,
    /// PDE options for fixtures without an override.
    pub maximal: MaximalOptions,
    /// PDE options by fixture name, replacing `maximal`.
    pub overrides: BTreeMap<String, MaximalOptions>,
    /// Particle indicator; skipped when absent.
    pub particle: Option<ReplicaConfig>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            builtin: true,
            only: Vec::new(),
            fixtures: Vec::new(),
            maximal: MaximalOptions::default(),
            overrides: BTreeMap::new(),
            particle: None,
            seed: 0,
            output_dir: None,
        }
    }
}

pub enum ConfigFile {
    Single(Box<ExperimentConfig>),
    Bundle(Bundle),
}

fn parse_error(path: &Path, e: toml::de::Error) -> CliError {
    CliError::Parse { path: path.to_path_buf(), message: e.to_string() }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// A single experiment, or a bundle when the file has an `experiments` array.
pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = read_text(path)?;
    let table: toml::Table = text.parse().map_err(|e| parse_error(path, e))?;
    if table.contains_key("experiments") {
        Ok(ConfigFile::Bundle(toml::from_str(&text).map_err(|e| parse_error(path, e))?))
    } else {
        Ok(ConfigFile::Single(Box::new(toml::from_str(&text).map_err(|e| parse_error(path, e))?)))
    }
}

pub fn load_compare(path: &Path) -> CliResult<CompareConfig> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| parse_error(path, e))
}

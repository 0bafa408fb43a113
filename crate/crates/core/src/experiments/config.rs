//! Experiment configuration files.
//!
//! A configuration is a TOML document with one table per concern:
//!
//! ```toml
//! [model]
//! kind = "allen-cahn-grid"   # or "particle-chain"
//! dx = 0.04                  # grid only; alternatively give `n`
//! gamma = 1.0
//! epsilon = 0.05
//! dt = 0.02
//!
//! [dynamics]
//! scheme = "strang"          # "euler" for the chain, "strang" or "lie" for the grid
//! noise = "grid"             # or "spectral" together with `noise_truncation`
//!
//! [ams]
//! n_rep = 100
//! k_rep = 1
//! z_a = -0.99
//! z_b = 0.99
//! x0 = -0.8
//!
//! [run]
//! seed = 1
//! n_mc = 20
//! ```
//!
//! Overrides `section.key=value` are applied to the parsed document before
//! validation, so they take precedence over the file. Values are read as TOML
//! literals and fall back to plain strings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{NoiseMode, NoiseSharing, Scheme, StepperConfig};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams, Potential, State};
use crate::rare_event::{AmsConfig, ReactionCoordinate, TiePolicy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    pub dt: f64,
    #[serde(default = "default_potential")]
    pub potential: Potential,
}

fn default_potential() -> Potential {
    Potential::DoubleWell
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Grid,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_truncation: Option<usize>,
    #[serde(default = "default_sharing")]
    pub noise_sharing: NoiseSharing,
}

fn default_noise() -> NoiseKind {
    NoiseKind::Grid
}

fn default_sharing() -> NoiseSharing {
    NoiseSharing::Shared
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection { scheme: None, noise: NoiseKind::Grid, noise_truncation: None, noise_sharing: NoiseSharing::Shared }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmsSection {
    pub n_rep: usize,
    #[serde(default = "one")]
    pub k_rep: usize,
    pub z_a: f64,
    pub z_b: f64,
    /// Constant initial value on every site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Explicit initial state; overrides `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_vector: Option<Vec<f64>>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps_per_run: u64,
    #[serde(default = "one_u64")]
    pub store_stride: u64,
    #[serde(default)]
    pub tie_policy: TiePolicy,
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

fn default_max_iterations() -> u64 {
    10_000_000
}

fn default_max_steps() -> u64 {
    100_000_000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryFormat {
    Csv,
    Bin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    /// Independent AMS realizations per estimate.
    #[serde(default = "one")]
    pub n_mc: usize,
    /// Sample count for direct Monte Carlo.
    #[serde(default = "default_samples")]
    pub n_samples: u64,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Normalized two-particle couplings for the bifurcation table.
    #[serde(default)]
    pub kappas: Vec<f64>,
    /// Chain couplings for the four-particle spectrum table.
    #[serde(default)]
    pub gammas_n4: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist_bins: Option<usize>,
    #[serde(default = "default_format")]
    pub traj_format: TrajectoryFormat,
    /// Reference samples for the dip-test p-value.
    #[serde(default = "default_dip_reference")]
    pub dip_reference: usize,
}

fn default_samples() -> u64 {
    10_000
}

fn default_format() -> TrajectoryFormat {
    TrajectoryFormat::Csv
}

fn default_dip_reference() -> usize {
    500
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            n_mc: 1,
            n_samples: default_samples(),
            epsilons: Vec::new(),
            kappas: Vec::new(),
            gammas_n4: Vec::new(),
            hist_bins: None,
            traj_format: TrajectoryFormat::Csv,
            dip_reference: default_dip_reference(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    pub ams: AmsSection,
    #[serde(default)]
    pub run: RunSection,
}

fn default_name() -> String {
    "experiment".into()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let merged;
        let source = if overrides.is_empty() {
            text
        } else {
            merged = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
            merged.as_str()
        };
        let cfg: ExperimentConfig =
            toml::from_str(source).map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let params = match (m.kind, m.n, m.dx) {
            (ModelKind::AllenCahnGrid, None, Some(dx)) => ModelParams::grid_with_dx(dx, m.gamma, m.epsilon, m.dt),
            (ModelKind::AllenCahnGrid, Some(n), None) => ModelParams::grid(n, m.gamma, m.epsilon, m.dt),
            (ModelKind::ParticleChain, Some(n), None) => ModelParams::chain(n, m.gamma, m.epsilon, m.dt),
            (ModelKind::ParticleChain, _, Some(_)) => {
                return Err(Error::Config("model.dx only applies to the grid model".into()))
            }
            (_, Some(_), Some(_)) => return Err(Error::Config("give only one of model.n and model.dx".into())),
            (_, None, None) => return Err(Error::Config("model.n (or model.dx for the grid) is required".into())),
        }
        .map_err(|e| Error::Config(format!("[model]: {e}")))?;
        Ok(params.with_potential(m.potential))
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let params = self.model_params()?;
        let mut cfg = StepperConfig::new(params).with_noise_sharing(self.dynamics.noise_sharing);
        if let Some(scheme) = self.dynamics.scheme {
            cfg = cfg.with_scheme(scheme);
        }
        cfg = match (self.dynamics.noise, self.dynamics.noise_truncation) {
            (NoiseKind::Grid, None) => cfg,
            (NoiseKind::Spectral, Some(truncation)) => cfg.with_noise(NoiseMode::Spectral { truncation }),
            (NoiseKind::Spectral, None) => {
                return Err(Error::Config("dynamics.noise = \"spectral\" needs dynamics.noise_truncation".into()))
            }
            (NoiseKind::Grid, Some(_)) => {
                return Err(Error::Config("dynamics.noise_truncation needs dynamics.noise = \"spectral\"".into()))
            }
        };
        cfg.validate().map_err(|e| Error::Config(format!("[dynamics]: {e}")))?;
        Ok(cfg)
    }

    pub fn initial_state(&self) -> Result<State> {
        let n = self.model_params()?.n;
        match (&self.ams.x0_vector, self.ams.x0) {
            (Some(v), _) => {
                if v.len() != n {
                    return Err(Error::Config(format!("ams.x0_vector has {} entries, model has {n}", v.len())));
                }
                Ok(State::new(v.clone()))
            }
            (None, Some(c)) => Ok(State::constant(n, c)),
            (None, None) => Err(Error::Config("ams.x0 or ams.x0_vector is required".into())),
        }
    }

    /// AMS configuration for the given master seed.
    pub fn ams_config(&self, master_seed: u64) -> Result<AmsConfig> {
        let a = &self.ams;
        let cfg = AmsConfig {
            n_rep: a.n_rep,
            k_rep: a.k_rep,
            z_a: a.z_a,
            z_b: a.z_b,
            x0: self.initial_state()?,
            max_iterations: a.max_iterations,
            max_steps_per_run: a.max_steps_per_run,
            master_seed,
            stepper: self.stepper()?,
            reaction: ReactionCoordinate::MeanMagnetization,
            store_stride: a.store_stride,
            tie_policy: a.tie_policy,
        };
        cfg.validate().map_err(|e| Error::Config(format!("[ams]: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.ams_config(self.run.seed)?;
        if self.run.n_mc == 0 {
            return Err(Error::Config("run.n_mc must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applies one `section.key=value` override to a parsed document.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("empty key in `{spec}`")))?;
    let mut cursor = table;
    for k in keys {
        let entry = cursor.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{k}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    DirectMc,
    SweepEpsilon,
    Trajectories,
    Bifurcation,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::DirectMc => "direct-mc",
            Command::SweepEpsilon => "sweep-epsilon",
            Command::Trajectories => "trajectories",
            Command::Bifurcation => "bifurcation",
        }
    }
}

/// Provenance record written next to every set of outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub experiment: String,
    pub command: Command,
    pub master_seed: u64,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub worker_count: usize,
    pub outputs: Vec<String>,
    /// Iterations with equal maximal levels, summed over all AMS runs.
    pub tie_events: u64,
    pub failures: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Content hash of the command and resolved configuration (16 hex digits).
pub fn run_id(command: Command, cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update(b"\n");
    h.update(cfg.to_toml_string().as_bytes());
    h.update(b"\n");
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

//! Experiment harness: configuration files, presets, commands and artifacts.

mod commands;
mod config;
mod manifest;
pub mod output;

pub use commands::{
    cmd_bifurcation, cmd_direct_mc, cmd_estimate, cmd_sweep_epsilon, cmd_trajectories, fit_log_probability,
    last_crossing_transverse, realization_seed, replay, run_command, run_realizations, BifurcationReport,
    DirectMcReport, EstimateReport, Realization, SummaryRow, SweepReport, TrajectoryReport,
};
pub use config::{
    apply_override, AmsSection, DynamicsSection, ExperimentConfig, ModelSection, NoiseKind, RunSection,
    TrajectoryFormat,
};
pub use manifest::{run_id, Command, RunManifest};

use crate::error::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "AMS_WORKERS";

/// Built-in configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("toy_1d", include_str!("../../presets/toy_1d.toml")),
    ("transition_desk", include_str!("../../presets/transition_desk.toml")),
    ("transition_fine", include_str!("../../presets/transition_fine.toml")),
    ("sweep_desk", include_str!("../../presets/sweep_desk.toml")),
    ("two_particles", include_str!("../../presets/two_particles.toml")),
    ("bifurcation", include_str!("../../presets/bifurcation.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses a preset with overrides applied.
pub fn load_preset(name: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = preset(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    ExperimentConfig::from_toml_str(text, overrides)
}

/// Worker count from `AMS_WORKERS`, defaulting to the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{classify_regime_2d, critical_points_2d, hessian_spectrum_origin, numerical_spectrum_origin};
use crate::error::{Error, Result};
use crate::experiments::manifest::{run_id, Command, RunManifest};
use crate::experiments::output::{cell, write_trajectory_bin, write_trajectory_csv, CsvTable};
use crate::experiments::{ExperimentConfig, TrajectoryFormat};
use crate::model::ModelKind;
use crate::rare_event::{
    ams_estimate, crossing_positions, direct_mc_estimate, AmsOutput, ReactionCoordinate, TiePolicy,
};
use crate::rng::derive_seed;
use crate::stats::{dip_test, histogram, linear_fit, mean, std_unbiased, DipTest, Histogram, LinearFit};

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub method: String,
    pub kind: ModelKind,
    pub n: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub n_rep: usize,
    pub k_rep: usize,
    /// AMS realizations, or samples for direct Monte Carlo.
    pub n_mc: u64,
    pub n_failed: u64,
    pub estimate: f64,
    /// Unbiased standard deviation of one realization (one Bernoulli sample for direct MC).
    pub std: f64,
    pub std_error: f64,
    pub mean_iterations: f64,
    pub tie_events: u64,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 16] = [
        "experiment",
        "method",
        "kind",
        "n",
        "gamma",
        "epsilon",
        "dt",
        "n_rep",
        "k_rep",
        "n_mc",
        "n_failed",
        "estimate",
        "std",
        "std_error",
        "mean_iterations",
        "tie_events",
    ];

    fn cells(&self) -> Vec<String> {
        let kind = match self.kind {
            ModelKind::ParticleChain => "particle-chain",
            ModelKind::AllenCahnGrid => "allen-cahn-grid",
        };
        vec![
            self.experiment.clone(),
            self.method.clone(),
            kind.into(),
            cell(self.n),
            cell(self.gamma),
            cell(self.epsilon),
            cell(self.dt),
            cell(self.n_rep),
            cell(self.k_rep),
            cell(self.n_mc),
            cell(self.n_failed),
            cell(self.estimate),
            cell(self.std),
            cell(self.std_error),
            cell(self.mean_iterations),
            cell(self.tie_events),
        ]
    }
}

/// Per-realization outcome of an AMS estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub estimate: Option<f64>,
    pub q_iterations: u64,
    pub tie_events: u64,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub summary: SummaryRow,
    pub realizations: Vec<Realization>,
    pub manifest: RunManifest,
}

/// Seed of AMS realization `index`.
pub fn realization_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, index as u64)
}

fn start_manifest(command: Command, cfg: &ExperimentConfig) -> RunManifest {
    RunManifest {
        run_id: run_id(command, cfg),
        experiment: cfg.name.clone(),
        command,
        master_seed: cfg.run.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: 0.0,
        worker_count: rayon::current_num_threads(),
        outputs: Vec::new(),
        tie_events: 0,
        failures: Vec::new(),
        config: cfg.clone(),
    }
}

fn finish(mut manifest: RunManifest, out_dir: &Path, started: Instant) -> Result<RunManifest> {
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Runs `n_mc` AMS realizations of `cfg` and aggregates them.
///
/// Extinction and non-convergence are recorded per realization; other errors
/// (including timeouts) abort. If every realization fails, the first error is
/// returned.
pub fn run_realizations(cfg: &ExperimentConfig, experiment: &str) -> Result<(SummaryRow, Vec<Realization>)> {
    let base = cfg.ams_config(cfg.run.seed)?;
    let results: Vec<(usize, u64, Result<AmsOutput>)> = (0..cfg.run.n_mc)
        .into_par_iter()
        .map(|r| {
            let seed = realization_seed(cfg.run.seed, r);
            let ams = base.clone().with_seed(seed);
            (r, seed, ams_estimate(&ams))
        })
        .collect();

    let mut realizations = Vec::with_capacity(results.len());
    let mut first_error = None;
    for (index, seed, res) in results {
        match res {
            Ok(out) => realizations.push(Realization {
                index,
                seed,
                estimate: Some(out.estimate),
                q_iterations: out.q_iterations,
                tie_events: out.tie_events,
                status: "ok".into(),
            }),
            Err(e @ (Error::Extinction { .. } | Error::NotConverged { .. })) => {
                realizations.push(Realization {
                    index,
                    seed,
                    estimate: None,
                    q_iterations: 0,
                    tie_events: 0,
                    status: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let estimates: Vec<f64> = realizations.iter().filter_map(|r| r.estimate).collect();
    if estimates.is_empty() {
        return Err(first_error.expect("at least one realization ran"));
    }
    let iterations: Vec<f64> =
        realizations.iter().filter(|r| r.estimate.is_some()).map(|r| r.q_iterations as f64).collect();
    let std = std_unbiased(&estimates);
    let params = base.stepper.params;
    let summary = SummaryRow {
        experiment: experiment.to_string(),
        method: match base.tie_policy {
            TiePolicy::LowestIndex => "ams".into(),
            TiePolicy::KillAll => "ams-kill-all-ties".into(),
        },
        kind: params.kind,
        n: params.n,
        gamma: params.gamma,
        epsilon: params.epsilon,
        dt: params.dt,
        n_rep: base.n_rep,
        k_rep: base.k_rep,
        n_mc: cfg.run.n_mc as u64,
        n_failed: (realizations.len() - estimates.len()) as u64,
        estimate: mean(&estimates),
        std,
        std_error: std / (estimates.len() as f64).sqrt(),
        mean_iterations: mean(&iterations),
        tie_events: realizations.iter().map(|r| r.tie_events).sum(),
    };
    Ok((summary, realizations))
}

fn realization_table(run_id: &str, realizations: &[Realization]) -> CsvTable {
    let mut t = CsvTable::new(run_id, &["realization", "seed", "estimate", "q_iterations", "tie_events", "status"]);
    for r in realizations {
        t.push(vec![
            cell(r.index),
            cell(r.seed),
            r.estimate.map(cell).unwrap_or_default(),
            cell(r.q_iterations),
            cell(r.tie_events),
            r.status.replace(',', ";"),
        ]);
    }
    t
}

/// `estimate`: `n_mc` independent AMS realizations; writes `summary.csv`,
/// `realizations.csv` and `manifest.json`.
pub fn cmd_estimate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<EstimateReport> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = start_manifest(Command::Estimate, cfg);
    let (summary, realizations) = run_realizations(cfg, &cfg.name)?;

    let mut table = CsvTable::new(&manifest.run_id, &SummaryRow::HEADER);
    table.push(summary.cells());
    table.write(&out_dir.join("summary.csv"))?;
    realization_table(&manifest.run_id, &realizations).write(&out_dir.join("realizations.csv"))?;

    manifest.outputs = vec!["summary.csv".into(), "realizations.csv".into()];
    manifest.tie_events = summary.tie_events;
    manifest.failures = realizations.iter().filter(|r| r.estimate.is_none()).map(|r| r.status.clone()).collect();
    let manifest = finish(manifest, out_dir, started)?;
    Ok(EstimateReport { summary, realizations, manifest })
}

#[derive(Clone, Debug)]
pub struct DirectMcReport {
    pub summary: SummaryRow,
    pub manifest: RunManifest,
}

/// `direct-mc`: `run.n_samples` independent runs; writes `summary.csv` and `manifest.json`.
pub fn cmd_direct_mc(cfg: &ExperimentConfig, out_dir: &Path) -> Result<DirectMcReport> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = start_manifest(Command::DirectMc, cfg);
    let ams = cfg.ams_config(cfg.run.seed)?;
    let n = cfg.run.n_samples;
    let (p, se) = direct_mc_estimate(&ams, n)?;
    let params = ams.stepper.params;
    let summary = SummaryRow {
        experiment: cfg.name.clone(),
        method: "direct-mc".into(),
        kind: params.kind,
        n: params.n,
        gamma: params.gamma,
        epsilon: params.epsilon,
        dt: params.dt,
        n_rep: 0,
        k_rep: 0,
        n_mc: n,
        n_failed: 0,
        estimate: p,
        std: (p * (1.0 - p)).sqrt(),
        std_error: se,
        mean_iterations: 0.0,
        tie_events: 0,
    };
    let mut table = CsvTable::new(&manifest.run_id, &SummaryRow::HEADER);
    table.push(summary.cells());
    table.write(&out_dir.join("summary.csv"))?;
    manifest.outputs = vec!["summary.csv".into()];
    let manifest = finish(manifest, out_dir, started)?;
    Ok(DirectMcReport { summary, manifest })
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SummaryRow>,
    pub fit: LinearFit,
    pub manifest: RunManifest,
}

/// Least-squares fit of `log p` against `1/ε`.
pub fn fit_log_probability(epsilons: &[f64], probabilities: &[f64]) -> Result<LinearFit> {
    if epsilons.len() != probabilities.len() {
        return Err(Error::InvalidArgument("one probability per ε expected".into()));
    }
    if let Some(p) = probabilities.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::InvalidArgument(format!("cannot take the logarithm of p = {p}")));
    }
    let x: Vec<f64> = epsilons.iter().map(|e| 1.0 / e).collect();
    let y: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    linear_fit(&x, &y)
}

/// `sweep-epsilon`: one AMS estimate per `run.epsilons` entry, then the fit of
/// `log p` against `1/ε`. Writes `summary.csv`, `fit.csv` and `manifest.json`;
/// on failure the rows finished so far are still written.
pub fn cmd_sweep_epsilon(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepReport> {
    let started = Instant::now();
    let epsilons = cfg.run.epsilons.clone();
    if epsilons.len() < 3 {
        return Err(Error::Config(format!("run.epsilons needs at least 3 values, got {}", epsilons.len())));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = start_manifest(Command::SweepEpsilon, cfg);
    let mut table = CsvTable::new(&manifest.run_id, &SummaryRow::HEADER);
    let mut rows = Vec::new();
    for &eps in &epsilons {
        let mut sub = cfg.clone();
        sub.model.epsilon = eps;
        match run_realizations(&sub, &cfg.name) {
            Ok((row, _)) => {
                table.push(row.cells());
                rows.push(row);
            }
            Err(e) => {
                table.write(&out_dir.join("summary.csv"))?;
                manifest.outputs = vec!["summary.csv".into()];
                manifest.failures.push(format!("ε = {eps}: {e}"));
                finish(manifest, out_dir, started)?;
                return Err(e);
            }
        }
    }
    table.write(&out_dir.join("summary.csv"))?;
    let probabilities: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let fit = fit_log_probability(&epsilons, &probabilities)?;
    let mut fit_table = CsvTable::new(&manifest.run_id, &["slope", "intercept", "r_squared", "points"]);
    fit_table.push(vec![cell(fit.slope), cell(fit.intercept), cell(fit.r_squared), cell(epsilons.len())]);
    fit_table.write(&out_dir.join("fit.csv"))?;
    manifest.outputs = vec!["summary.csv".into(), "fit.csv".into()];
    manifest.tie_events = rows.iter().map(|r| r.tie_events).sum();
    let manifest = finish(manifest, out_dir, started)?;
    Ok(SweepReport { rows, fit, manifest })
}

#[derive(Clone, Debug)]
pub struct TrajectoryReport {
    pub estimate: f64,
    pub trajectory_files: Vec<String>,
    /// Transverse coordinate `(x_1 - x_2)/2` at the last crossing of `ξ = 0`
    /// for each reactive trajectory (two-particle models only).
    /// Summarized with the dip test in `crossing_stats.csv`.
    pub crossings: Vec<f64>,
    pub histogram: Option<Histogram>,
    pub dip: Option<DipTest>,
    pub manifest: RunManifest,
}

/// Transverse coordinate of the last crossing of `ξ = level`, if any.
pub fn last_crossing_transverse(rc: &ReactionCoordinate, run: &crate::rare_event::StoppedRun, level: f64) -> Option<f64> {
    crossing_positions(rc, run, level).last().map(|s| 0.5 * (s[0] - s[1]))
}

/// `trajectories`: one AMS run; exports every reactive trajectory and, for two
/// particles, the crossing histogram on `ξ = 0` (`hist.csv`) with a dip test.
pub fn cmd_trajectories(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrajectoryReport> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = start_manifest(Command::Trajectories, cfg);
    let ams = cfg.ams_config(cfg.run.seed)?;
    let out = ams_estimate(&ams)?;
    let dt = ams.stepper.params.dt;

    let mut files = Vec::with_capacity(out.reactive_trajectories.len());
    for (i, run) in out.reactive_trajectories.iter().enumerate() {
        let name = match cfg.run.traj_format {
            TrajectoryFormat::Csv => format!("traj_{i:05}.csv"),
            TrajectoryFormat::Bin => format!("traj_{i:05}.bin"),
        };
        let path = out_dir.join(&name);
        match cfg.run.traj_format {
            TrajectoryFormat::Csv => write_trajectory_csv(&path, &manifest.run_id, run, dt)?,
            TrajectoryFormat::Bin => write_trajectory_bin(&path, run)?,
        }
        files.push(name);
    }

    let mut crossings = Vec::new();
    let mut hist = None;
    let mut dip = None;
    if ams.stepper.params.n == 2 {
        crossings = out
            .reactive_trajectories
            .iter()
            .filter_map(|r| last_crossing_transverse(&ams.reaction, r, 0.0))
            .collect();
        let mut ctable = CsvTable::new(&manifest.run_id, &["trajectory", "transverse"]);
        for (i, c) in crossings.iter().enumerate() {
            ctable.push(vec![cell(i), cell(c)]);
        }
        ctable.write(&out_dir.join("crossings.csv"))?;
        files.push("crossings.csv".into());
        if !crossings.is_empty() {
            let h = histogram(&crossings, cfg.run.hist_bins)?;
            let mut htable = CsvTable::new(&manifest.run_id, &["bin_center", "count"]);
            for (c, n) in h.centers().iter().zip(&h.counts) {
                htable.push(vec![cell(c), cell(n)]);
            }
            htable.write(&out_dir.join("hist.csv"))?;
            files.push("hist.csv".into());
            hist = Some(h);
        }
        if crossings.len() >= 4 {
            let d = dip_test(&crossings, cfg.run.dip_reference, derive_seed(cfg.run.seed, 0xD1B))?;
            let mut stable =
                CsvTable::new(&manifest.run_id, &["n", "mean", "std", "dip", "p_value", "n_reference"]);
            stable.push(vec![
                cell(crossings.len()),
                cell(mean(&crossings)),
                cell(std_unbiased(&crossings)),
                cell(d.dip),
                cell(d.p_value),
                cell(d.n_reference),
            ]);
            stable.write(&out_dir.join("crossing_stats.csv"))?;
            files.push("crossing_stats.csv".into());
            dip = Some(d);
        }
    }

    manifest.outputs = files.clone();
    manifest.tie_events = out.tie_events;
    let manifest = finish(manifest, out_dir, started)?;
    Ok(TrajectoryReport { estimate: out.estimate, trajectory_files: files, crossings, histogram: hist, dip, manifest })
}

#[derive(Clone, Debug)]
pub struct BifurcationReport {
    /// `(κ, number of critical points)` per requested coupling.
    pub counts: Vec<(f64, usize)>,
    pub manifest: RunManifest,
}

/// `bifurcation`: critical points for every `run.kappas` entry
/// (`critical_points.csv`) and the four-particle spectrum at the origin for
/// every `run.gammas_n4` entry (`spectrum_n4.csv`).
pub fn cmd_bifurcation(cfg: &ExperimentConfig, out_dir: &Path) -> Result<BifurcationReport> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = start_manifest(Command::Bifurcation, cfg);
    let mut table = CsvTable::new(
        &manifest.run_id,
        &["kappa", "regime", "x", "y", "eigenvalue_1", "eigenvalue_2", "class", "residual"],
    );
    let mut counts = Vec::new();
    for &kappa in &cfg.run.kappas {
        let regime = classify_regime_2d(kappa)?;
        let points = critical_points_2d(kappa)?;
        let regime_name = match regime {
            crate::bifurcation::Regime::SingleSaddle => "single-saddle",
            crate::bifurcation::Regime::TwoSaddles => "two-saddles",
            crate::bifurcation::Regime::FourSaddles => "four-saddles",
        };
        for p in &points {
            table.push(vec![
                cell(kappa),
                regime_name.into(),
                cell(p.location[0]),
                cell(p.location[1]),
                cell(p.hessian_eigenvalues[0]),
                cell(p.hessian_eigenvalues[1]),
                p.classification.label(),
                cell(p.residual),
            ]);
        }
        counts.push((kappa, points.len()));
    }
    table.write(&out_dir.join("critical_points.csv"))?;
    manifest.outputs.push("critical_points.csv".into());

    if !cfg.run.gammas_n4.is_empty() {
        let mut spec = CsvTable::new(&manifest.run_id, &["gamma", "index", "closed_form", "numerical"]);
        for &gamma in &cfg.run.gammas_n4 {
            let closed = hessian_spectrum_origin(4, gamma)?;
            let numeric = numerical_spectrum_origin(4, gamma)?;
            for (k, (a, b)) in closed.iter().zip(&numeric).enumerate() {
                spec.push(vec![cell(gamma), cell(k), cell(a), cell(b)]);
            }
        }
        spec.write(&out_dir.join("spectrum_n4.csv"))?;
        manifest.outputs.push("spectrum_n4.csv".into());
    }
    let manifest = finish(manifest, out_dir, started)?;
    Ok(BifurcationReport { counts, manifest })
}

/// Re-executes the command recorded in a manifest, writing into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let m = RunManifest::read(manifest_path)?;
    run_command(m.command, &m.config, out_dir)
}

/// Dispatches a command and returns its manifest.
pub fn run_command(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    Ok(match command {
        Command::Estimate => cmd_estimate(cfg, out_dir)?.manifest,
        Command::DirectMc => cmd_direct_mc(cfg, out_dir)?.manifest,
        Command::SweepEpsilon => cmd_sweep_epsilon(cfg, out_dir)?.manifest,
        Command::Trajectories => cmd_trajectories(cfg, out_dir)?.manifest,
        Command::Bifurcation => cmd_bifurcation(cfg, out_dir)?.manifest,
    })
}

//! Adaptive Multilevel Splitting.
//!
//! Every replica is a run from `x0` stopped at the first exit from
//! `[z_A, z_B]`. At iteration `q` the replicas whose maximal level is lowest
//! are killed; each one is rebuilt by copying a uniformly chosen survivor up to
//! the first step where that survivor strictly exceeds the killed level, then
//! resimulated with fresh keys until absorption.
//!
//! With `k_rep = 1` exactly one replica dies per iteration (lowest index on
//! ties), the loop ends once every replica has reached `B`, and the estimate is
//! `(1 - 1/n_rep)^Q`.
//!
//! With `k_rep > 1` the level `L_q` is the `k_rep`-th smallest maximum and all
//! replicas with maximum `<= L_q` die (`k_q >= k_rep` of them). The loop ends
//! once `L_q > z_B`, i.e. fewer than `k_rep` replicas are still short of `B`,
//! and the estimate is
//!
//! ```text
//! Π_q (1 - k_q / n_rep) · (#replicas in B) / n_rep
//! ```
//!
//! `TiePolicy::KillAll` applies the same rule with `k_rep = 1`: every replica
//! sharing the lowest maximum dies at once and the product estimator is used.
//! Branched replicas copy their donor's prefix, so in discrete time equal
//! maxima are common, and killing them one at a time inflates the estimate.
//!
//! The replicas left outside `B` are then replaced by copies of uniformly
//! chosen reactive replicas so that the output holds `n_rep` reactive paths.
//!
//! Key layout: replica `i` created at iteration `q` (initial runs have `q = 0`,
//! rebranches `q + 1`) uses `(master_seed, i, q, step)`. Selection draws use
//! replica id `u32::MAX`, generation `q` and step `i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::StepperConfig;
use crate::error::{Error, Result};
use crate::model::State;
use crate::rare_event::{ReactionCoordinate, Simulator, StopReason, StoppedRun};
use crate::rng::RngKey;

/// Replica id reserved for selection draws.
pub const SELECTION_STREAM: u32 = u32::MAX;

/// Treatment of replicas that share the lowest maximal level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Kill the lowest-indexed one (only meaningful for `k_rep = 1`).
    #[default]
    LowestIndex,
    /// Kill all of them.
    KillAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmsConfig {
    pub n_rep: usize,
    pub k_rep: usize,
    pub z_a: f64,
    pub z_b: f64,
    pub x0: State,
    pub max_iterations: u64,
    pub max_steps_per_run: u64,
    pub master_seed: u64,
    pub stepper: StepperConfig,
    #[serde(default)]
    pub reaction: ReactionCoordinate,
    /// Keep every `store_stride`-th state of each path (1 = full resolution).
    #[serde(default = "default_stride")]
    pub store_stride: u64,
    #[serde(default)]
    pub tie_policy: TiePolicy,
}

fn default_stride() -> u64 {
    1
}

impl AmsConfig {
    /// Configuration with `k_rep = 1`, full-resolution storage and generous
    /// iteration and step caps.
    pub fn new(stepper: StepperConfig, x0: State, z_a: f64, z_b: f64, n_rep: usize, master_seed: u64) -> Self {
        AmsConfig {
            n_rep,
            k_rep: 1,
            z_a,
            z_b,
            x0,
            max_iterations: 10_000_000,
            max_steps_per_run: 100_000_000,
            master_seed,
            stepper,
            reaction: ReactionCoordinate::MeanMagnetization,
            store_stride: 1,
            tie_policy: TiePolicy::LowestIndex,
        }
    }

    /// True when the plain `(1 - 1/n_rep)^Q` estimator applies.
    pub fn is_single_kill(&self) -> bool {
        self.k_rep == 1 && self.tie_policy == TiePolicy::LowestIndex
    }

    pub fn with_k_rep(mut self, k_rep: usize) -> Self {
        self.k_rep = k_rep;
        self
    }

    pub fn with_tie_policy(mut self, tie_policy: TiePolicy) -> Self {
        self.tie_policy = tie_policy;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rep < 2 {
            return Err(Error::InvalidArgument(format!("n_rep = {} must be at least 2", self.n_rep)));
        }
        if self.k_rep < 1 || self.k_rep >= self.n_rep {
            return Err(Error::InvalidArgument(format!(
                "k_rep = {} must lie in [1, n_rep) with n_rep = {}",
                self.k_rep, self.n_rep
            )));
        }
        self.stepper.validate()?;
        self.stepper.params.check_state(&self.x0)?;
        let xi0 = self.reaction.evaluate(&self.x0);
        if !(self.z_a < xi0 && xi0 < self.z_b) {
            return Err(Error::InvalidArgument(format!(
                "need z_A < xi(x0) < z_B, got {} < {} < {}",
                self.z_a, xi0, self.z_b
            )));
        }
        if self.store_stride == 0 {
            return Err(Error::InvalidArgument("store_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.stepper, self.reaction, self.z_a, self.z_b, self.max_steps_per_run, self.store_stride)
    }
}

/// One replica replaced at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillEvent {
    pub iteration: u64,
    pub replica: usize,
    pub level: f64,
    pub donor: usize,
    pub branch_step: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmsOutput {
    pub estimate: f64,
    pub q_iterations: u64,
    pub kill_log: Vec<KillEvent>,
    pub reactive_trajectories: Vec<StoppedRun>,
    /// Iterations whose selection involved equal maximal levels.
    pub tie_events: u64,
    /// Number of replicas killed at each iteration.
    pub killed_counts: Vec<usize>,
    /// Fraction of replicas in `B` when the loop stopped (1 for `k_rep = 1`).
    pub final_fraction: f64,
}

impl AmsOutput {
    /// Killed levels in iteration order.
    pub fn killed_levels(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.killed_counts.len());
        let mut last = None;
        for ev in &self.kill_log {
            if last != Some(ev.iteration) {
                out.push(ev.level);
                last = Some(ev.iteration);
            }
        }
        out
    }

    /// Checks the estimator identity, the level ordering and the validity of
    /// every returned trajectory; the message names the first violation.
    pub fn check_contracts(&self, cfg: &AmsConfig) -> std::result::Result<(), String> {
        let n = cfg.n_rep as f64;
        let expected = if cfg.is_single_kill() {
            (1.0 - 1.0 / n).powi(self.q_iterations as i32)
        } else {
            self.killed_counts.iter().map(|&k| 1.0 - k as f64 / n).fold(1.0, |a, b| a * b) * self.final_fraction
        };
        if self.estimate != expected {
            return Err(format!("estimate {} differs from the estimator formula {}", self.estimate, expected));
        }
        if self.killed_counts.len() as u64 != self.q_iterations {
            return Err("one killed count per iteration expected".into());
        }
        if self.kill_log.len() != self.killed_counts.iter().sum::<usize>() {
            return Err("kill log does not match killed counts".into());
        }
        let levels = self.killed_levels();
        if let Some(w) = levels.windows(2).find(|w| w[1] < w[0]) {
            return Err(format!("killed levels decrease: {} then {}", w[0], w[1]));
        }
        if self.reactive_trajectories.len() != cfg.n_rep {
            return Err("wrong number of trajectories".into());
        }
        for (i, r) in self.reactive_trajectories.iter().enumerate() {
            if r.first_step != 0 || r.first_state() != cfg.x0.as_slice() {
                return Err(format!("trajectory {i} does not start at x0"));
            }
            if r.stop_reason != StopReason::HitB {
                return Err(format!("trajectory {i} stopped with {:?}", r.stop_reason));
            }
            let hit_b = r.levels.iter().position(|&l| l > cfg.z_b);
            let hit_a = r.levels.iter().position(|&l| l < cfg.z_a);
            match (hit_b, hit_a) {
                (Some(b), None) if b + 1 == r.levels.len() => {}
                _ => return Err(format!("trajectory {i} does not reach B before A")),
            }
        }
        Ok(())
    }
}

/// Estimate `P(τ_B < τ_A)` for the dynamics started at `cfg.x0`.
pub fn ams_estimate(cfg: &AmsConfig) -> Result<AmsOutput> {
    cfg.validate()?;
    let sim = cfg.simulator()?;
    let n = cfg.n_rep;
    let mut replicas: Vec<StoppedRun> = (0..n)
        .into_par_iter()
        .map(|i| sim.run(&cfg.x0, cfg.master_seed, i as u32, 0))
        .collect::<Result<_>>()?;

    let mut kill_log = Vec::new();
    let mut killed_counts = Vec::new();
    let mut tie_events = 0u64;
    let mut q = 0u64;
    let mut product = 1.0f64;

    loop {
        let single = cfg.is_single_kill();
        let (killed, level, tied) = select(&replicas, cfg.k_rep, single);
        let done = if single {
            replicas.iter().all(|r| r.stop_reason == StopReason::HitB)
        } else {
            level > cfg.z_b
        };
        if done {
            break;
        }
        if q >= cfg.max_iterations {
            return Err(Error::NotConverged { iterations: q });
        }
        if tied {
            tie_events += 1;
        }
        let donors: Vec<usize> = (0..n).filter(|&j| replicas[j].max_level > level).collect();
        if donors.is_empty() {
            return Err(Error::Extinction { iteration: q, level });
        }
        let generation = u32::try_from(q + 1)
            .map_err(|_| Error::InvalidArgument("iteration count exceeds the key space".into()))?;
        let rebuilt: Vec<(usize, usize, StoppedRun, u64)> = killed
            .par_iter()
            .map(|&i| {
                let pick = RngKey::new(cfg.master_seed, SELECTION_STREAM, q as u32, i as u64).index(donors.len());
                let donor = donors[pick];
                let (run, step) = sim.branch(&replicas[donor], level, i as u32, generation)?;
                Ok((i, donor, run, step))
            })
            .collect::<Result<_>>()?;
        for (i, donor, run, branch_step) in rebuilt {
            kill_log.push(KillEvent { iteration: q, replica: i, level, donor, branch_step });
            replicas[i] = run;
        }
        if !single {
            product *= 1.0 - killed.len() as f64 / n as f64;
        }
        killed_counts.push(killed.len());
        q += 1;
    }

    let (estimate, final_fraction) = if cfg.is_single_kill() {
        let q_i32 = i32::try_from(q).map_err(|_| Error::NotConverged { iterations: q })?;
        ((1.0 - 1.0 / n as f64).powi(q_i32), 1.0)
    } else {
        let reactive: Vec<usize> = (0..n).filter(|&j| replicas[j].stop_reason == StopReason::HitB).collect();
        let fraction = reactive.len() as f64 / n as f64;
        let stranded: Vec<usize> = (0..n).filter(|&j| replicas[j].stop_reason != StopReason::HitB).collect();
        for i in stranded {
            let pick = RngKey::new(cfg.master_seed, SELECTION_STREAM, q as u32, i as u64).index(reactive.len());
            replicas[i] = replicas[reactive[pick]].clone();
        }
        (product * fraction, fraction)
    };

    Ok(AmsOutput {
        estimate,
        q_iterations: q,
        kill_log,
        reactive_trajectories: replicas,
        tie_events,
        killed_counts,
        final_fraction,
    })
}

/// Replicas to kill, the kill level, and whether equal maxima were involved.
fn select(replicas: &[StoppedRun], k_rep: usize, single: bool) -> (Vec<usize>, f64, bool) {
    if single {
        let mut best = 0usize;
        for (i, r) in replicas.iter().enumerate() {
            if r.max_level < replicas[best].max_level {
                best = i;
            }
        }
        let level = replicas[best].max_level;
        let tied = replicas.iter().filter(|r| r.max_level == level).count() > 1;
        return (vec![best], level, tied);
    }
    let mut maxima: Vec<f64> = replicas.iter().map(|r| r.max_level).collect();
    maxima.sort_by(f64::total_cmp);
    let level = maxima[k_rep - 1];
    let killed: Vec<usize> = (0..replicas.len()).filter(|&i| replicas[i].max_level <= level).collect();
    let tied = killed.len() > k_rep;
    (killed, level, tied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn toy(n_rep: usize, seed: u64) -> AmsConfig {
        let params = ModelParams::chain(1, 0.0, 0.08, 0.01).unwrap();
        AmsConfig::new(StepperConfig::new(params), State::constant(1, -0.8), -0.9, 0.9, n_rep, seed)
    }

    #[test]
    fn estimator_identity_and_contracts() {
        let cfg = toy(20, 5);
        let out = ams_estimate(&cfg).unwrap();
        out.check_contracts(&cfg).unwrap();
        assert_eq!(out.estimate, (1.0 - 1.0 / 20.0f64).powi(out.q_iterations as i32));
        assert_eq!(out.kill_log.len() as u64, out.q_iterations);
        let levels = out.killed_levels();
        assert!(levels.windows(2).all(|w| w[0] <= w[1]));
        for r in &out.reactive_trajectories {
            assert_eq!(r.stop_reason, StopReason::HitB);
            assert_eq!(r.first_state(), cfg.x0.as_slice());
            assert!(r.levels.iter().all(|&l| l >= cfg.z_a));
        }
    }

    #[test]
    fn all_reactive_at_start_means_no_iterations() {
        // Starting next to B with tiny noise: every run drifts up into B.
        let params = ModelParams::chain(1, 0.0, 1e-6, 0.01).unwrap();
        let cfg = AmsConfig::new(StepperConfig::new(params), State::constant(1, 0.85), -0.9, 0.9, 10, 1);
        let out = ams_estimate(&cfg).unwrap();
        assert_eq!(out.q_iterations, 0);
        assert_eq!(out.estimate, 1.0);
    }

    #[test]
    fn extinction_without_noise() {
        let params = ModelParams::chain(1, 0.0, 0.0, 0.01).unwrap();
        let cfg = AmsConfig::new(StepperConfig::new(params), State::constant(1, -0.8), -0.9, 0.9, 5, 1);
        assert!(matches!(ams_estimate(&cfg), Err(Error::Extinction { iteration: 0, .. })));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = toy(1, 0);
        assert!(ams_estimate(&cfg).is_err());
        cfg.n_rep = 10;
        cfg.k_rep = 10;
        assert!(ams_estimate(&cfg).is_err());
        cfg.k_rep = 1;
        cfg.x0 = State::constant(1, -0.95);
        assert!(ams_estimate(&cfg).is_err());
    }

    #[test]
    fn multi_kill_variant_contracts() {
        let cfg = toy(20, 9).with_k_rep(5);
        let out = ams_estimate(&cfg).unwrap();
        let product: f64 = out.killed_counts.iter().map(|&k| 1.0 - k as f64 / 20.0).product();
        assert_eq!(out.estimate, product * out.final_fraction);
        out.check_contracts(&cfg).unwrap();
        assert!(out.killed_counts.iter().all(|&k| k >= 5));
        assert!(out.reactive_trajectories.iter().all(|r| r.stop_reason == StopReason::HitB));
    }
}

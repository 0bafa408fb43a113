//! Trajectories stopped at the first exit from `[z_A, z_B]`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Stepper, StepperConfig, Workspace};
use crate::error::{Error, Result};
use crate::model::State;
use crate::rare_event::ReactionCoordinate;
use crate::rng::RngKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    HitA,
    HitB,
    MaxSteps,
}

/// Steps `from_step..` of a run were driven by keys
/// `(master_seed, replica_id, branch_generation, step)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageSegment {
    pub from_step: u64,
    pub replica_id: u32,
    pub branch_generation: u32,
}

/// A simulated path together with its reaction-coordinate levels.
///
/// Levels are kept for every step. States are kept every `stride` steps plus
/// the final one; with `stride == 1` the path is at full resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppedRun {
    pub dim: usize,
    /// Step index of the first recorded state.
    pub first_step: u64,
    pub stride: u64,
    pub master_seed: u64,
    states: Vec<f64>,
    stored_steps: Vec<u64>,
    pub levels: Vec<f64>,
    pub max_level: f64,
    pub stop_reason: StopReason,
    pub lineage: Vec<LineageSegment>,
}

impl StoppedRun {
    /// Index of the last step.
    pub fn last_step(&self) -> u64 {
        self.first_step + self.levels.len() as u64 - 1
    }

    /// Level at `step`, if recorded.
    pub fn level_at(&self, step: u64) -> Option<f64> {
        step.checked_sub(self.first_step).and_then(|k| self.levels.get(k as usize).copied())
    }

    pub fn final_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    pub fn len_stored(&self) -> usize {
        self.stored_steps.len()
    }

    pub fn stored_steps(&self) -> &[u64] {
        &self.stored_steps
    }

    pub fn state(&self, idx: usize) -> &[f64] {
        &self.states[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn first_state(&self) -> &[f64] {
        self.state(0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.stored_steps.len() - 1)
    }

    /// `(step, state)` pairs of the stored path.
    pub fn path(&self) -> impl Iterator<Item = (u64, &[f64])> + '_ {
        self.stored_steps.iter().copied().zip(self.states.chunks_exact(self.dim))
    }

    /// Key that drove the transition out of `step`.
    pub fn key_for_step(&self, step: u64) -> RngKey {
        let seg = self.lineage.iter().rev().find(|s| s.from_step <= step).expect("lineage covers step 0");
        RngKey::new(self.master_seed, seg.replica_id, seg.branch_generation, step)
    }

    /// First step whose level strictly exceeds `level`.
    pub fn first_exceedance(&self, level: f64) -> Option<u64> {
        self.levels.iter().position(|&l| l > level).map(|k| self.first_step + k as u64)
    }

    /// Keeps the path up to and including stored index `idx`.
    fn truncate_to_stored(&mut self, idx: usize) {
        let step = self.stored_steps[idx];
        self.stored_steps.truncate(idx + 1);
        self.states.truncate((idx + 1) * self.dim);
        self.levels.truncate((step - self.first_step) as usize + 1);
        self.lineage.retain(|s| s.from_step < step);
        self.max_level = self.levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }

    fn push(&mut self, step: u64, state: &[f64], level: f64, store: bool) {
        self.levels.push(level);
        if level > self.max_level {
            self.max_level = level;
        }
        if store {
            self.stored_steps.push(step);
            self.states.extend_from_slice(state);
        }
    }
}

/// Advances replicas of one model until they leave `[z_A, z_B]`.
#[derive(Clone, Debug)]
pub struct Simulator {
    stepper: Stepper,
    pub reaction: ReactionCoordinate,
    pub z_a: f64,
    pub z_b: f64,
    pub max_steps: u64,
    pub stride: u64,
}

impl Simulator {
    pub fn new(
        stepper: StepperConfig,
        reaction: ReactionCoordinate,
        z_a: f64,
        z_b: f64,
        max_steps: u64,
        stride: u64,
    ) -> Result<Self> {
        if !(z_a < z_b) {
            return Err(Error::InvalidArgument(format!("z_A = {z_a} must be below z_B = {z_b}")));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("store stride must be >= 1".into()));
        }
        Ok(Simulator { stepper: Stepper::new(stepper)?, reaction, z_a, z_b, max_steps, stride })
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    fn classify(&self, level: f64) -> Option<StopReason> {
        if level < self.z_a {
            Some(StopReason::HitA)
        } else if level > self.z_b {
            Some(StopReason::HitB)
        } else {
            None
        }
    }

    /// Fresh run from `x0` at step 0.
    pub fn run(&self, x0: &[f64], master_seed: u64, replica_id: u32, generation: u32) -> Result<StoppedRun> {
        let level = self.reaction.evaluate(x0);
        let mut run = StoppedRun {
            dim: x0.len(),
            first_step: 0,
            stride: self.stride,
            master_seed,
            states: Vec::new(),
            stored_steps: Vec::new(),
            levels: Vec::new(),
            max_level: f64::NEG_INFINITY,
            stop_reason: StopReason::MaxSteps,
            lineage: vec![LineageSegment { from_step: 0, replica_id, branch_generation: generation }],
        };
        run.push(0, x0, level, true);
        self.extend(run)
    }

    /// Copies `donor` up to the first stored step at or after its first
    /// exceedance of `level`, then resimulates with fresh keys.
    pub fn branch(&self, donor: &StoppedRun, level: f64, replica_id: u32, generation: u32) -> Result<(StoppedRun, u64)> {
        let tau = donor
            .first_exceedance(level)
            .ok_or_else(|| Error::InvalidArgument(format!("donor never exceeds level {level}")))?;
        let idx = donor.stored_steps.partition_point(|&s| s < tau);
        let mut run = donor.clone();
        run.truncate_to_stored(idx);
        let branch_step = run.stored_steps[idx];
        run.lineage.push(LineageSegment { from_step: branch_step, replica_id, branch_generation: generation });
        run.stop_reason = StopReason::MaxSteps;
        Ok((self.extend(run)?, branch_step))
    }

    fn extend(&self, mut run: StoppedRun) -> Result<StoppedRun> {
        let mut ws: Workspace = self.stepper.workspace();
        let mut x = run.final_state().to_vec();
        let mut step = run.last_step();
        let mut level = run.final_level();
        loop {
            if let Some(reason) = self.classify(level) {
                run.stop_reason = reason;
                if run.stored_steps.last() != Some(&step) {
                    run.stored_steps.push(step);
                    run.states.extend_from_slice(&x);
                }
                return Ok(run);
            }
            if step >= self.max_steps {
                if run.stored_steps.last() != Some(&step) {
                    run.stored_steps.push(step);
                    run.states.extend_from_slice(&x);
                }
                run.stop_reason = StopReason::MaxSteps;
                return Err(Error::AbsorbedTimeout { steps: step, partial: Box::new(run) });
            }
            let key = run.key_for_step(step);
            self.stepper.step_in_place(&mut x, key, &mut ws);
            step += 1;
            level = self.reaction.evaluate(&x);
            run.push(step, &x, level, step.is_multiple_of(self.stride));
        }
    }

    /// Outcome of a run without recording the path.
    pub fn outcome(&self, x0: &[f64], master_seed: u64, replica_id: u32, generation: u32) -> Result<(StopReason, u64)> {
        let mut ws = self.stepper.workspace();
        let mut x = x0.to_vec();
        let base = RngKey::new(master_seed, replica_id, generation, 0);
        let mut step = 0u64;
        loop {
            if let Some(reason) = self.classify(self.reaction.evaluate(&x)) {
                return Ok((reason, step));
            }
            if step >= self.max_steps {
                let level = self.reaction.evaluate(&x);
                let partial = StoppedRun {
                    dim: x.len(),
                    first_step: step,
                    stride: 1,
                    master_seed,
                    states: x,
                    stored_steps: vec![step],
                    levels: vec![level],
                    max_level: level,
                    stop_reason: StopReason::MaxSteps,
                    lineage: vec![LineageSegment { from_step: 0, replica_id, branch_generation: generation }],
                };
                return Err(Error::AbsorbedTimeout { steps: step, partial: Box::new(partial) });
            }
            self.stepper.step_in_place(&mut x, base.at_step(step), &mut ws);
            step += 1;
        }
    }
}

/// Runs the configured dynamics from `x_start` (taken to sit at `start_step`)
/// with keys `key.at_step(k)` for `k >= start_step`, until absorption.
pub fn run_until_absorbed(
    cfg: &crate::rare_event::AmsConfig,
    x_start: &State,
    start_step: u64,
    key: RngKey,
) -> Result<StoppedRun> {
    cfg.stepper.params.check_state(x_start)?;
    let sim = cfg.simulator()?;
    let level = sim.reaction.evaluate(x_start);
    let mut run = StoppedRun {
        dim: x_start.len(),
        first_step: start_step,
        stride: 1,
        master_seed: key.master_seed,
        states: Vec::new(),
        stored_steps: Vec::new(),
        levels: Vec::new(),
        max_level: f64::NEG_INFINITY,
        stop_reason: StopReason::MaxSteps,
        lineage: vec![LineageSegment {
            from_step: start_step,
            replica_id: key.replica_id,
            branch_generation: key.branch_generation,
        }],
    };
    run.push(start_step, x_start, level, true);
    let sim = Simulator { stride: 1, ..sim };
    sim.extend(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::rare_event::AmsConfig;

    fn chain_cfg(epsilon: f64) -> AmsConfig {
        let params = ModelParams::chain(4, 1.0, epsilon, 0.01).unwrap();
        AmsConfig::new(StepperConfig::new(params), State::constant(4, -0.8), -0.99, 0.99, 2, 17)
    }

    #[test]
    fn already_absorbed_start_stops_at_step_zero() {
        let cfg = chain_cfg(0.1);
        let run = run_until_absorbed(&cfg, &State::constant(4, -0.995), 0, RngKey::new(1, 0, 0, 0)).unwrap();
        assert_eq!(run.stop_reason, StopReason::HitA);
        assert_eq!(run.last_step(), 0);
    }

    #[test]
    fn deterministic_descent_hits_a() {
        let cfg = chain_cfg(0.0);
        let run = run_until_absorbed(&cfg, &cfg.x0, 0, RngKey::new(1, 0, 0, 0)).unwrap();
        assert_eq!(run.stop_reason, StopReason::HitA);
        assert!(run.levels.windows(2).all(|w| w[1] <= w[0]));

        let grid = ModelParams::grid(26, 1.0, 0.0, 0.02).unwrap();
        let cfg = AmsConfig::new(StepperConfig::new(grid), State::constant(26, -0.8), -0.99, 0.99, 2, 0);
        let run = run_until_absorbed(&cfg, &cfg.x0, 5, RngKey::new(1, 0, 0, 5)).unwrap();
        assert_eq!(run.stop_reason, StopReason::HitA);
        assert_eq!(run.first_step, 5);
    }

    #[test]
    fn invariants_of_a_stopped_run() {
        let cfg = chain_cfg(0.3);
        let sim = cfg.simulator().unwrap();
        let run = sim.run(&cfg.x0, 3, 0, 0).unwrap();
        let max = run.levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(run.max_level, max);
        match run.stop_reason {
            StopReason::HitA => assert!(run.final_level() < cfg.z_a),
            StopReason::HitB => assert!(run.final_level() > cfg.z_b),
            StopReason::MaxSteps => unreachable!(),
        }
        assert_eq!(run.len_stored() as u64, run.last_step() + 1);
    }

    #[test]
    fn timeout_carries_partial_run() {
        let mut cfg = chain_cfg(0.0);
        cfg.max_steps_per_run = 3;
        let err = run_until_absorbed(&cfg, &cfg.x0, 0, RngKey::new(1, 0, 0, 0)).unwrap_err();
        match err {
            Error::AbsorbedTimeout { steps, partial } => {
                assert_eq!(steps, 3);
                assert_eq!(partial.len_stored(), 4);
                assert_eq!(partial.stop_reason, StopReason::MaxSteps);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn branch_copies_prefix_bit_for_bit() {
        let cfg = chain_cfg(0.3);
        let sim = cfg.simulator().unwrap();
        let donor = (0..200).map(|r| sim.run(&cfg.x0, 9, r, 0).unwrap()).find(|r| r.max_level > -0.6).unwrap();
        let level = -0.7;
        let (child, step) = sim.branch(&donor, level, 77, 3).unwrap();
        assert_eq!(Some(step), donor.first_exceedance(level));
        for k in 0..=step as usize {
            assert_eq!(child.state(k), donor.state(k));
            assert_eq!(child.levels[k].to_bits(), donor.levels[k].to_bits());
        }
        assert!(child.levels[step as usize] > level);
        assert!(child.levels[..step as usize].iter().all(|&l| l <= level));
        assert_eq!(child.key_for_step(step - 1), donor.key_for_step(step - 1));
        assert_eq!(child.key_for_step(step), RngKey::new(9, 77, 3, step));
    }

    #[test]
    fn outcome_agrees_with_recorded_run() {
        let cfg = chain_cfg(0.3);
        let sim = cfg.simulator().unwrap();
        for r in 0..20 {
            let run = sim.run(&cfg.x0, 4, r, 0).unwrap();
            assert_eq!(sim.outcome(&cfg.x0, 4, r, 0).unwrap(), (run.stop_reason, run.last_step()));
        }
    }

    #[test]
    fn strided_storage_keeps_endpoints() {
        let mut cfg = chain_cfg(0.3);
        cfg.store_stride = 7;
        let sim = cfg.simulator().unwrap();
        let run = sim.run(&cfg.x0, 5, 0, 0).unwrap();
        assert_eq!(run.stored_steps()[0], 0);
        assert_eq!(*run.stored_steps().last().unwrap(), run.last_step());
        assert!(run.stored_steps().iter().rev().skip(1).all(|s| s % 7 == 0));
    }
}

use amsim::dynamics::StepperConfig;
use amsim::experiments::{load_preset, realization_seed, run_realizations, with_workers};
use amsim::model::{ModelParams, State};
use amsim::rare_event::{ams_estimate, direct_mc_estimate, AmsConfig, Simulator, TiePolicy};
use amsim::stats::{mean, std_unbiased};
use amsim::Error;
use rayon::prelude::*;

fn toy(n_rep: usize) -> AmsConfig {
    let p = ModelParams::chain(1, 0.0, 0.08, 0.01).unwrap();
    AmsConfig::new(StepperConfig::new(p), State::constant(1, -0.8), -0.9, 0.9, n_rep, 0)
}

#[test]
fn realizations_do_not_depend_on_the_worker_count() {
    let cfg = load_preset("transition_desk", &["run.n_mc=6".into(), "ams.n_rep=30".into()]).unwrap();
    let one = with_workers(1, || run_realizations(&cfg, "w")).unwrap().unwrap();
    let four = with_workers(4, || run_realizations(&cfg, "w")).unwrap().unwrap();
    assert_eq!(one.1, four.1);
    assert_eq!(one.0.estimate.to_bits(), four.0.estimate.to_bits());
}

#[test]
fn rerunning_a_seed_is_bit_identical() {
    for seed in 0..20 {
        let cfg = toy(2).with_seed(seed);
        let (a, b) = (ams_estimate(&cfg), ams_estimate(&cfg));
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn branched_replicas_reproduce_the_donor_prefix() {
    let cfg = toy(10).with_seed(5);
    let out = ams_estimate(&cfg).unwrap();
    for ev in out.kill_log.iter().take(20) {
        assert!(ev.branch_step >= 1);
        assert!(ev.level < cfg.z_b);
    }
    let sim: Simulator = cfg.simulator().unwrap();
    let donor = sim.run(cfg.x0.as_slice(), 5, 0, 0).unwrap();
    let level = donor.levels.iter().cloned().fold(f64::MIN, f64::max) - 1e-3;
    let (child, step) = sim.branch(&donor, level, 7, 1).unwrap();
    let k = (step - donor.first_step) as usize;
    assert_eq!(&child.levels[..=k], &donor.levels[..=k]);
}

/// AMS means over independent realizations agree with brute force within
/// three combined standard errors. Single kills use the tie-consistent policy.
#[test]
fn estimator_agrees_with_direct_monte_carlo() {
    let base = toy(20).with_tie_policy(TiePolicy::KillAll);
    let mc = direct_mc_estimate(&base.clone().with_seed(4242), 2_000_000).unwrap();
    for (n_rep, k_rep) in [(20, 1), (20, 5), (100, 1), (100, 5)] {
        let cfg = AmsConfig { n_rep, k_rep, ..base.clone() };
        let est: Vec<f64> = (0..400)
            .into_par_iter()
            .map(|i| {
                let c = cfg.clone().with_seed(realization_seed(17, i));
                let out = ams_estimate(&c).unwrap();
                out.check_contracts(&c).unwrap();
                out.estimate
            })
            .collect();
        let (m, se) = (mean(&est), std_unbiased(&est) / 20.0);
        let z = (m - mc.0).abs() / (se * se + mc.1 * mc.1).sqrt();
        assert!(z <= 3.0, "n_rep {n_rep}, k_rep {k_rep}: {m} vs {} (z = {z})", mc.0);
    }
}

#[test]
fn zero_temperature_run_goes_extinct() {
    let p = ModelParams::chain(1, 0.0, 0.0, 0.01).unwrap();
    let cfg = AmsConfig::new(StepperConfig::new(p), State::constant(1, -0.8), -0.9, 0.9, 10, 0);
    let err = ams_estimate(&cfg).unwrap_err();
    assert!(matches!(err, Error::Extinction { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn kill_all_policy_removes_every_tied_replica() {
    let cfg = toy(20).with_tie_policy(TiePolicy::KillAll).with_seed(3);
    let out = ams_estimate(&cfg).unwrap();
    out.check_contracts(&cfg).unwrap();
    assert!(out.killed_counts.iter().all(|&k| k >= 1));
    assert_eq!(out.killed_counts.iter().filter(|&&k| k > 1).count() as u64, out.tie_events);
    assert_eq!(out.final_fraction, 1.0);
}

#[test]
fn step_cap_reports_a_timeout() {
    let cfg = AmsConfig { max_steps_per_run: 3, ..toy(10) };
    let err = ams_estimate(&cfg).unwrap_err();
    assert!(matches!(err, Error::AbsorbedTimeout { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}

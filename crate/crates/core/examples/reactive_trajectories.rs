//! Where do two coupled particles cross the zero-magnetization line?
//!
//! Collects the reactive trajectories of one AMS run, records the transverse
//! coordinate `(x_0 - x_1) / 2` at the last crossing of zero mean, and tests the
//! resulting sample for unimodality.

use amsim::dynamics::StepperConfig;
use amsim::experiments::last_crossing_transverse;
use amsim::model::{ModelParams, State};
use amsim::rare_event::{ams_estimate, AmsConfig, ReactionCoordinate};
use amsim::stats::{dip_test, histogram};

fn main() -> amsim::Result<()> {
    let kappa: f64 = std::env::args().nth(1).map(|s| s.parse().expect("kappa")).unwrap_or(0.4);
    let params = ModelParams::chain(2, ModelParams::chain_gamma_for_kappa(2, kappa), 0.02, 0.01)?;
    let cfg = AmsConfig::new(StepperConfig::new(params), State::constant(2, -0.8), -0.99, 0.99, 400, 7);
    let out = ams_estimate(&cfg)?;
    let rc = ReactionCoordinate::MeanMagnetization;
    let sample: Vec<f64> =
        out.reactive_trajectories.iter().filter_map(|run| last_crossing_transverse(&rc, run, 0.0)).collect();

    println!("kappa {kappa}: p = {:.4e}, {} crossings", out.estimate, sample.len());
    let h = histogram(&sample, None)?;
    let peak = *h.counts.iter().max().unwrap_or(&1) as f64;
    for (c, n) in h.centers().iter().zip(&h.counts) {
        println!("{c:+.3} {:<50} {n}", "#".repeat((50.0 * *n as f64 / peak) as usize));
    }
    let dip = dip_test(&sample, 500, 11)?;
    println!("dip = {:.4}, p-value = {:.3}", dip.dip, dip.p_value);
    Ok(())
}

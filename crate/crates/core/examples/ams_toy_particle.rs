//! AMS on a single particle in the double well, checked against brute force.

use amsim::dynamics::StepperConfig;
use amsim::model::{ModelParams, State};
use amsim::rare_event::{ams_estimate, direct_mc_estimate, AmsConfig};
use amsim::stats::{mean, std_unbiased};

fn main() -> amsim::Result<()> {
    let params = ModelParams::chain(1, 0.0, 0.08, 0.01)?;
    let base = AmsConfig::new(StepperConfig::new(params), State::constant(1, -0.8), -0.9, 0.9, 50, 0);

    let estimates: Vec<f64> = (0..200)
        .map(|seed| ams_estimate(&base.clone().with_seed(seed)).map(|o| o.estimate))
        .collect::<amsim::Result<_>>()?;
    let (m, s) = (mean(&estimates), std_unbiased(&estimates));
    println!("AMS    {m:.6} +/- {:.6}  (200 runs, n_rep = 50, sample std {s:.6})", s / 200f64.sqrt());

    let (p, se) = direct_mc_estimate(&base, 200_000)?;
    println!("direct {p:.6} +/- {se:.6}  (200000 samples)");
    Ok(())
}

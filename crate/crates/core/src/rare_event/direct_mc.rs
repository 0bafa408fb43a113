use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rare_event::{AmsConfig, StopReason};
use crate::rng::derive_seed;

/// Label mixed into the master seed so direct sampling never reuses the
/// streams of AMS replicas built from the same configuration.
const DIRECT_MC_LABEL: u64 = 0x4D43_5F44_4952_4543;

/// Fraction of independent runs from `cfg.x0` that reach `B` before `A`,
/// with binomial standard error `sqrt(p (1 - p) / n)`.
pub fn direct_mc_estimate(cfg: &AmsConfig, n_samples: u64) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    cfg.stepper.validate()?;
    cfg.stepper.params.check_state(&cfg.x0)?;
    let sim = cfg.simulator()?;
    let seed = derive_seed(cfg.master_seed, DIRECT_MC_LABEL);
    let hits = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let (reason, _) = sim.outcome(&cfg.x0, seed, i as u32, (i >> 32) as u32)?;
            Ok::<u64, Error>(u64::from(reason == StopReason::HitB))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let n = n_samples as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

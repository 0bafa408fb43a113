//! Crossing statistics on the line `x + y = 0`, pooled over independent AMS
//! runs. A single run is dominated by a few ancestors, so its crossings are
//! strongly correlated.

use amsim::experiments::{last_crossing_transverse, load_preset, realization_seed};
use amsim::rare_event::{ams_estimate, ReactionCoordinate};
use amsim::stats::{dip_test, mean, std_unbiased};
use rayon::prelude::*;

fn pooled_crossings(gamma: f64, epsilon: f64, runs: usize, n_rep: usize) -> Vec<f64> {
    let cfg = load_preset(
        "two_particles",
        &[format!("model.gamma={gamma}"), format!("model.epsilon={epsilon}"), format!("ams.n_rep={n_rep}")],
    )
    .unwrap();
    let rc = ReactionCoordinate::MeanMagnetization;
    (0..runs)
        .into_par_iter()
        .flat_map_iter(|i| {
            let ams = cfg.ams_config(realization_seed(cfg.run.seed, i)).unwrap();
            let out = ams_estimate(&ams).unwrap();
            out.check_contracts(&ams).unwrap();
            out.reactive_trajectories
                .iter()
                .filter_map(|r| last_crossing_transverse(&rc, r, 0.0))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn single_saddle_gives_a_centred_unimodal_histogram() {
    let x = pooled_crossings(0.25, 0.005, 20, 200);
    let (m, s) = (mean(&x), std_unbiased(&x));
    let dip = dip_test(&x, 500, 1).unwrap();
    assert!(m.abs() < 0.05 * s, "mean {m}, std {s}");
    assert!(dip.p_value >= 0.05, "dip {} p {}", dip.dip, dip.p_value);
}

#[test]
fn four_saddle_regime_gives_a_bimodal_histogram() {
    let x = pooled_crossings(0.0625, 0.005, 20, 200);
    let dip = dip_test(&x, 500, 1).unwrap();
    assert!(dip.p_value < 0.05, "dip {} p {}", dip.dip, dip.p_value);
    assert!(x.iter().any(|&v| v > 0.3) && x.iter().any(|&v| v < -0.3));
}

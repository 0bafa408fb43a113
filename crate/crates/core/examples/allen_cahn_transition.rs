//! Transition probability of the stochastic Allen-Cahn equation from a
//! constant profile near -1 to the opposite well, through the experiment
//! harness.
//!
//! ```text
//! cargo run --release --example allen_cahn_transition -- 20
//! ```

use amsim::experiments::{load_preset, run_realizations};

fn main() -> amsim::Result<()> {
    let n_mc = std::env::args().nth(1).unwrap_or_else(|| "10".into());
    let cfg = load_preset("transition_desk", &[format!("run.n_mc={n_mc}")])?;
    let (row, realizations) = run_realizations(&cfg, &cfg.name)?;
    for r in &realizations {
        println!("seed {:>20}  p = {:.6}  iterations {}", r.seed, r.estimate.unwrap_or(f64::NAN), r.q_iterations);
    }
    println!(
        "\nmean {:.6}  std {:.6}  std error {:.6}  ({} grid nodes, {} failed)",
        row.estimate, row.std, row.std_error, row.n, row.n_failed
    );
    Ok(())
}

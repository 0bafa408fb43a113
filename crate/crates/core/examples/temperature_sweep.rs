//! Probability against temperature with a fit of `ln p = a / epsilon + b`.

use amsim::experiments::{fit_log_probability, load_preset, run_realizations};

fn main() -> amsim::Result<()> {
    let base = load_preset("sweep_desk", &["run.n_mc=8".into()])?;
    let mut eps = Vec::new();
    let mut probs = Vec::new();
    for &e in &base.run.epsilons {
        let cfg = load_preset("sweep_desk", &["run.n_mc=8".into(), format!("model.epsilon={e}")])?;
        let (row, _) = run_realizations(&cfg, "sweep")?;
        println!("epsilon {e:<6} p = {:.3e}  (std error {:.1e})", row.estimate, row.std_error);
        eps.push(e);
        probs.push(row.estimate);
    }
    let fit = fit_log_probability(&eps, &probs)?;
    println!("ln p = {:.4} / epsilon + {:.4}   r^2 = {:.4}", fit.slope, fit.intercept, fit.r_squared);
    Ok(())
}

//! Critical points of the two-particle energy as the coupling varies, the
//! reduced one-dimensional energy along the diagonal, and the Hessian spectrum
//! of the four-particle chain at the origin.

use amsim::bifurcation::{
    classify_regime_2d, critical_points_2d, hessian_spectrum_origin, normal_form_2d, numerical_spectrum_origin,
};

fn main() -> amsim::Result<()> {
    for kappa in [0.05, 0.2, 0.4, 0.6] {
        let regime = classify_regime_2d(kappa)?;
        println!("kappa = {kappa}: {regime:?}");
        for cp in critical_points_2d(kappa)? {
            let p = cp.location.as_slice();
            println!("  ({:+.5}, {:+.5})  {}", p[0], p[1], cp.classification.label());
        }
    }

    let kappa = 1.0 / 32.0;
    println!("\nreduced energy along the diagonal, kappa = {kappa}");
    for i in 0..=10 {
        let a = -1.25 + 0.25 * i as f64;
        let g = normal_form_2d(a, kappa)?;
        println!("  A = {a:+.2}  G = {:+.6}  {:?}", g.value, g.branch);
    }

    let gamma = 1.0 / 16.0;
    println!("\nfour-particle spectrum at the origin, gamma = {gamma}");
    let exact = hessian_spectrum_origin(4, gamma)?;
    let numeric = numerical_spectrum_origin(4, gamma)?;
    for (e, n) in exact.iter().zip(&numeric) {
        println!("  {e:+.12}  {n:+.12}");
    }
    Ok(())
}

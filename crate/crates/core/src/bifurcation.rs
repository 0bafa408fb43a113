//! Critical points of the two-particle energy and reduced normal forms.
//!
//! The two-particle problem is written in its normalized form
//!
//! ```text
//! F(x, y) = V(x) + V(y) + κ (x - y)^2 / 2,   V(u) = u^4/4 - u^2/2,
//! ```
//!
//! which is twice the chain energy with `N = 2` and `κ = 4γ`. Regimes:
//! `κ > 1/2` one saddle at the origin, `1/3 < κ < 1/2` two anti-diagonal
//! saddles, `κ < 1/3` four saddles on the `α(κ)` branches.
//!
//! For `N = 4` the chain energy itself is used (coupling `γ`), and the normal
//! form along `e_1 = (1, -1-√2, 1+√2, -1)` with transverse direction
//! `(1, 0, 0, 1)` is obtained by exact polynomial reduction of the energy.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sorted_eigenvalues;
use crate::model::{energy, hessian_energy, ModelParams, State};

/// Eigenvalues with modulus below this are treated as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Minimum,
    /// Saddle with the given number of unstable directions.
    Saddle(usize),
    Maximum,
    Degenerate,
}

impl Classification {
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Self {
        if eigenvalues.iter().any(|l| l.abs() < ZERO_EIGENVALUE_TOL) {
            return Classification::Degenerate;
        }
        let negative = eigenvalues.iter().filter(|&&l| l < 0.0).count();
        match negative {
            0 => Classification::Minimum,
            k if k == eigenvalues.len() => Classification::Maximum,
            k => Classification::Saddle(k),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Classification::Minimum => "minimum".into(),
            Classification::Saddle(k) => format!("saddle-{k}"),
            Classification::Maximum => "maximum".into(),
            Classification::Degenerate => "degenerate".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: State,
    pub hessian_eigenvalues: Vec<f64>,
    pub classification: Classification,
    /// Euclidean norm of the gradient after polishing.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SingleSaddle,
    TwoSaddles,
    FourSaddles,
}

impl Regime {
    pub fn critical_point_count(&self) -> usize {
        match self {
            Regime::SingleSaddle => 3,
            Regime::TwoSaddles => 5,
            Regime::FourSaddles => 9,
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("coupling must be positive and finite, got {kappa}")));
    }
    Ok(())
}

/// Gradient of the normalized two-particle energy.
pub fn gradient_2d(kappa: f64, x: f64, y: f64) -> [f64; 2] {
    [x * x * x - x + kappa * (x - y), y * y * y - y - kappa * (x - y)]
}

/// Hessian of the normalized two-particle energy.
pub fn hessian_2d(kappa: f64, x: f64, y: f64) -> Matrix2<f64> {
    Matrix2::new(3.0 * x * x - 1.0 + kappa, -kappa, -kappa, 3.0 * y * y - 1.0 + kappa)
}

/// One Newton step for the gradient system; `None` if the Hessian is singular.
pub fn newton_step_2d(kappa: f64, p: [f64; 2]) -> Option<[f64; 2]> {
    let g = gradient_2d(kappa, p[0], p[1]);
    let delta = hessian_2d(kappa, p[0], p[1]).lu().solve(&Vector2::new(g[0], g[1]))?;
    Some([p[0] - delta[0], p[1] - delta[1]])
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

fn polish(kappa: f64, mut p: [f64; 2]) -> [f64; 2] {
    for _ in 0..5 {
        if norm(gradient_2d(kappa, p[0], p[1])) < 1e-15 {
            break;
        }
        match newton_step_2d(kappa, p) {
            Some(q) if norm(gradient_2d(kappa, q[0], q[1])) <= norm(gradient_2d(kappa, p[0], p[1])) => p = q,
            _ => break,
        }
    }
    p
}

/// All real critical points of the normalized two-particle energy.
pub fn critical_points_2d(kappa: f64) -> Result<Vec<CriticalPoint>> {
    check_kappa(kappa)?;
    let mut seeds: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 1.0], [-1.0, -1.0]];
    if kappa < 0.5 {
        let s = (1.0 - 2.0 * kappa).sqrt();
        seeds.push([s, -s]);
        seeds.push([-s, s]);
    }
    if kappa <= 1.0 / 3.0 {
        let disc = ((kappa + 1.0) * (1.0 - 3.0 * kappa)).max(0.0).sqrt();
        for inner in [1.0 - kappa + disc, 1.0 - kappa - disc] {
            let a = (inner / 2.0).sqrt();
            for x in [a, -a] {
                let y = x * (x * x - 1.0 + kappa) / kappa;
                seeds.push([x, y]);
            }
        }
    }

    let mut points: Vec<CriticalPoint> = Vec::new();
    for seed in seeds {
        let p = polish(kappa, seed);
        if points.iter().any(|c| (c.location[0] - p[0]).abs() < 1e-7 && (c.location[1] - p[1]).abs() < 1e-7) {
            continue;
        }
        let h = hessian_2d(kappa, p[0], p[1]);
        let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        points.push(CriticalPoint {
            location: State::new(p.to_vec()),
            classification: Classification::from_eigenvalues(&eig),
            hessian_eigenvalues: eig,
            residual: norm(gradient_2d(kappa, p[0], p[1])),
        });
    }
    Ok(points)
}

pub fn classify_regime_2d(kappa: f64) -> Result<Regime> {
    check_kappa(kappa)?;
    if kappa == 0.5 || kappa == 1.0 / 3.0 {
        return Err(Error::DegenerateParameter(format!("κ = {kappa} is a regime boundary")));
    }
    Ok(if kappa > 0.5 {
        Regime::SingleSaddle
    } else if kappa > 1.0 / 3.0 {
        Regime::TwoSaddles
    } else {
        Regime::FourSaddles
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The transverse amplitude at the minimum is nonzero.
    Inner,
    /// The transverse minimum sits at zero.
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormEval {
    pub amplitude: f64,
    pub value: f64,
    pub branch: Branch,
}

/// Amplitude below which the inner branch of the two-particle normal form applies.
pub fn inner_threshold_2d(kappa: f64) -> f64 {
    ((1.0 - 2.0 * kappa) / 3.0).max(0.0).sqrt()
}

/// Transverse part `G_1(A) = min_ρ [ρ^4/2 - ρ^2 (1 - 2κ) + 3 ρ^2 A^2]`.
pub fn transverse_minimum_2d(amplitude: f64, kappa: f64) -> f64 {
    let a2 = amplitude * amplitude;
    if amplitude.abs() < inner_threshold_2d(kappa) {
        let r = 1.0 - 2.0 * kappa - 3.0 * a2;
        -0.5 * r * r
    } else {
        0.0
    }
}

/// Two-particle normal form `G(A) = A^4/2 - A^2 + G_1(A)` along `(1, 1)`.
pub fn normal_form_2d(amplitude: f64, kappa: f64) -> Result<NormalFormEval> {
    check_kappa(kappa)?;
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude must be finite, got {amplitude}")));
    }
    let a2 = amplitude * amplitude;
    let (value, branch) = if amplitude.abs() < inner_threshold_2d(kappa) {
        let v = -0.5 + 2.0 * kappa + 2.0 * a2 - 2.0 * kappa * kappa - 6.0 * kappa * a2 - 4.0 * a2 * a2;
        (v, Branch::Inner)
    } else {
        (0.5 * a2 * a2 - a2, Branch::Outer)
    };
    Ok(NormalFormEval { amplitude, value, branch })
}

/// Unit-free direction `(1, -1-√2, 1+√2, -1)`, the top Hessian mode at the origin for `N = 4`.
pub fn e1_4() -> [f64; 4] {
    let s = 1.0 + std::f64::consts::SQRT_2;
    [1.0, -s, s, -1.0]
}

/// Coefficients `(c0, c2, c4)` with `E(A e_1 + ρ (1,0,0,1)) = c0 + c2 ρ^2 + c4 ρ^4`.
///
/// The restriction is an even quartic in `ρ`, so three samples determine it.
pub fn quartic_in_rho_4(amplitude: f64, gamma: f64) -> Result<(f64, f64, f64)> {
    let params = ModelParams::chain(4, gamma, 0.0, 1.0)?;
    let e1 = e1_4();
    let at = |rho: f64| {
        let x = State::new(vec![
            amplitude * e1[0] + rho,
            amplitude * e1[1],
            amplitude * e1[2],
            amplitude * e1[3] + rho,
        ]);
        energy(&params, &x)
    };
    let (e0, e_1, e_2) = (at(0.0)?, at(1.0)?, at(2.0)?);
    let c4 = (e_2 - 4.0 * e_1 + 3.0 * e0) / 12.0;
    let c2 = e_1 - e0 - c4;
    Ok((e0, c2, c4))
}

/// Four-particle normal form along `e_1`, minimizing the energy over the
/// transverse amplitude on `(1, 0, 0, 1)`.
pub fn normal_form_4(amplitude: f64, gamma: f64) -> Result<NormalFormEval> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("γ must be positive, got {gamma}")));
    }
    let (c0, c2, c4) = quartic_in_rho_4(amplitude, gamma)?;
    if c2 < 0.0 {
        Ok(NormalFormEval { amplitude, value: c0 - c2 * c2 / (4.0 * c4), branch: Branch::Inner })
    } else {
        Ok(NormalFormEval { amplitude, value: c0, branch: Branch::Outer })
    }
}

/// Closed-form Hessian spectrum at the origin, ascending.
///
/// `n = 2` takes the normalized coupling `κ` and returns `{-1, 2κ - 1}`;
/// `n = 4` takes the chain coupling `γ` and returns
/// `{-1/4, 8γ - 1/4, (8 ± 4√2) γ - 1/4}`.
pub fn hessian_spectrum_origin(n: usize, coupling: f64) -> Result<Vec<f64>> {
    if !(coupling > 0.0) {
        return Err(Error::InvalidArgument(format!("coupling must be positive, got {coupling}")));
    }
    let mut eig = match n {
        2 => vec![-1.0, 2.0 * coupling - 1.0],
        4 => {
            let g = coupling;
            let s = 4.0 * std::f64::consts::SQRT_2;
            vec![-0.25, 8.0 * g - 0.25, (8.0 + s) * g - 0.25, (8.0 - s) * g - 0.25]
        }
        _ => return Err(Error::InvalidArgument(format!("closed-form spectrum only for N = 2 or 4, got {n}"))),
    };
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Spectrum at the origin from a dense eigensolve of the model Hessian, in
/// the same normalization as [`hessian_spectrum_origin`].
pub fn numerical_spectrum_origin(n: usize, coupling: f64) -> Result<Vec<f64>> {
    let (gamma, scale) = match n {
        2 => (coupling / 4.0, 2.0),
        4 => (coupling, 1.0),
        _ => return Err(Error::InvalidArgument(format!("closed-form spectrum only for N = 2 or 4, got {n}"))),
    };
    let params = ModelParams::chain(n, gamma, 0.0, 1.0)?;
    let h = hessian_energy(&params, &State::zeros(n))?.to_dense() * scale;
    Ok(sorted_eigenvalues(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn regime_counts_and_residuals() {
        for (kappa, count) in [(0.6, 3), (0.5, 3), (0.45, 5), (0.4, 5), (1.0 / 3.0, 5), (0.3, 9), (0.2, 9), (0.05, 9)] {
            let pts = critical_points_2d(kappa).unwrap();
            assert_eq!(pts.len(), count, "κ = {kappa}");
            for p in &pts {
                assert!(p.residual < 1e-10, "κ = {kappa} residual {}", p.residual);
            }
        }
    }

    #[test]
    fn single_saddle_example() {
        let pts = critical_points_2d(0.6).unwrap();
        let origin = pts.iter().find(|p| p.location[0].abs() < 1e-12).unwrap();
        assert!(close(origin.hessian_eigenvalues[0], -1.0, 1e-12));
        assert!(close(origin.hessian_eigenvalues[1], 0.2, 1e-12));
        assert_eq!(origin.classification, Classification::Saddle(1));
        assert_eq!(pts.iter().filter(|p| p.classification == Classification::Minimum).count(), 2);
    }

    #[test]
    fn anti_diagonal_saddles() {
        let s = 0.2f64.sqrt();
        let pts = critical_points_2d(0.4).unwrap();
        for sign in [1.0, -1.0] {
            let p = pts
                .iter()
                .find(|p| close(p.location[0], sign * s, 1e-12) && close(p.location[1], -sign * s, 1e-12))
                .unwrap();
            assert!(close(p.hessian_eigenvalues[0], -0.4, 1e-12));
            assert!(close(p.hessian_eigenvalues[1], 0.4, 1e-12));
            assert_eq!(p.classification, Classification::Saddle(1));
        }
        let origin = &pts[0];
        assert_eq!(origin.classification, Classification::Maximum);
    }

    #[test]
    fn four_saddle_regime_points_are_fixed_by_newton() {
        let pts = critical_points_2d(0.2).unwrap();
        assert_eq!(pts.iter().filter(|p| matches!(p.classification, Classification::Saddle(1))).count(), 4);
        for p in &pts {
            let q = newton_step_2d(0.2, [p.location[0], p.location[1]]).unwrap();
            assert!(close(q[0], p.location[0], 1e-10) && close(q[1], p.location[1], 1e-10));
        }
    }

    #[test]
    fn point_set_symmetric() {
        for kappa in [0.6, 0.4, 0.2] {
            let pts = critical_points_2d(kappa).unwrap();
            let has = |x: f64, y: f64| pts.iter().any(|p| close(p.location[0], x, 1e-9) && close(p.location[1], y, 1e-9));
            for p in &pts {
                let (x, y) = (p.location[0], p.location[1]);
                assert!(has(-x, -y) && has(y, x));
            }
        }
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime_2d(0.6).unwrap(), Regime::SingleSaddle);
        assert_eq!(classify_regime_2d(0.4).unwrap(), Regime::TwoSaddles);
        assert_eq!(classify_regime_2d(0.2).unwrap(), Regime::FourSaddles);
        assert!(matches!(classify_regime_2d(0.5), Err(Error::DegenerateParameter(_))));
        assert!(matches!(classify_regime_2d(1.0 / 3.0), Err(Error::DegenerateParameter(_))));
        assert!(matches!(critical_points_2d(0.0), Err(Error::InvalidArgument(_))));
        for kappa in [0.6, 0.4, 0.2] {
            let regime = classify_regime_2d(kappa).unwrap();
            assert_eq!(regime.critical_point_count(), critical_points_2d(kappa).unwrap().len());
        }
    }

    #[test]
    fn transverse_minimum_matches_grid_search() {
        for kappa in [0.1, 0.2, 0.3, 0.45] {
            for amplitude in [0.0, 0.1, 0.2, 0.35, 0.5, 0.9] {
                let g1 = |rho: f64| {
                    let r2 = rho * rho;
                    0.5 * r2 * r2 - r2 * (1.0 - 2.0 * kappa) + 3.0 * r2 * amplitude * amplitude
                };
                let brute = (0..=100_000).map(|k| g1(-2.0 + 4.0 * k as f64 / 100_000.0)).fold(f64::INFINITY, f64::min);
                assert!(close(transverse_minimum_2d(amplitude, kappa), brute, 1e-6));
            }
        }
    }

    #[test]
    fn normal_form_values_and_continuity() {
        assert_eq!(normal_form_2d(1.0, 0.2).unwrap().value, -0.5);
        assert_eq!(normal_form_2d(1.0, 0.2).unwrap().branch, Branch::Outer);
        for kappa in [0.1, 0.25, 0.4] {
            let t = inner_threshold_2d(kappa);
            let inner = normal_form_2d(t * (1.0 - 1e-12), kappa).unwrap();
            let outer = normal_form_2d(t, kappa).unwrap();
            assert_eq!(inner.branch, Branch::Inner);
            assert_eq!(outer.branch, Branch::Outer);
            assert!(close(inner.value, outer.value, 1e-9));
            for a in [0.05, 0.2, 0.7] {
                let g = normal_form_2d(a, kappa).unwrap().value;
                assert!(close(g, normal_form_2d(-a, kappa).unwrap().value, 1e-12));
                let a2 = a * a;
                assert!(close(g, 0.5 * a2 * a2 - a2 + transverse_minimum_2d(a, kappa), 1e-12));
            }
        }
    }

    #[test]
    fn normal_form_curvature_at_zero_above_threshold() {
        // Above κ = 1/2 only the outer branch exists and zero is a local maximum.
        let h = 1e-3;
        let g = |a: f64| normal_form_2d(a, 0.51).unwrap().value;
        assert!(g(h) - 2.0 * g(0.0) + g(-h) < 0.0);
    }

    #[test]
    fn closed_form_spectra_match_dense_eigensolve() {
        for kappa in [0.2, 0.4, 0.5, 0.6] {
            let a = hessian_spectrum_origin(2, kappa).unwrap();
            let b = numerical_spectrum_origin(2, kappa).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!(close(*x, *y, 1e-10));
            }
        }
        for gamma in [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0] {
            let a = hessian_spectrum_origin(4, gamma).unwrap();
            let b = numerical_spectrum_origin(4, gamma).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!(close(*x, *y, 1e-10));
            }
        }
        assert_eq!(hessian_spectrum_origin(2, 0.5).unwrap(), vec![-1.0, 0.0]);
        assert!(hessian_spectrum_origin(3, 0.5).is_err());
    }

    #[test]
    fn four_particle_spectrum_values() {
        let eig = hessian_spectrum_origin(4, 1.0 / 16.0).unwrap();
        let r = std::f64::consts::SQRT_2 / 4.0;
        let expected = [-0.25, 0.25 - r, 0.25, 0.25 + r];
        for (x, y) in eig.iter().zip(expected) {
            assert!(close(*x, y, 1e-15));
        }
        let gamma = 1.0 / (16.0 * (2.0 + std::f64::consts::SQRT_2));
        let eig = hessian_spectrum_origin(4, gamma).unwrap();
        assert!(eig[3].abs() < 1e-15);
        assert!(eig[..3].iter().all(|&l| l < 0.0));
    }

    #[test]
    fn four_particle_normal_form_against_direct_minimization() {
        for gamma in [0.02, 1.0 / 32.0, 0.05, 0.1] {
            for amplitude in [0.0, 0.05, 0.1, 0.3] {
                let nf = normal_form_4(amplitude, gamma).unwrap();
                let params = ModelParams::chain(4, gamma, 0.0, 1.0).unwrap();
                let e1 = e1_4();
                let brute = (0..=20_000)
                    .map(|k| {
                        let rho = -2.0 + 4.0 * k as f64 / 20_000.0;
                        let x = State::new(vec![
                            amplitude * e1[0] + rho,
                            amplitude * e1[1],
                            amplitude * e1[2],
                            amplitude * e1[3] + rho,
                        ]);
                        energy(&params, &x).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(nf.value <= brute + 1e-12);
                assert!(close(nf.value, brute, 1e-6), "γ={gamma} A={amplitude}: {} vs {brute}", nf.value);
            }
        }
    }

    #[test]
    fn four_particle_transverse_branch_switches_at_one_sixteenth() {
        // At A = 0 the ρ^2 coefficient is 4γ - 1/4.
        assert_eq!(normal_form_4(0.0, 0.06).unwrap().branch, Branch::Inner);
        assert_eq!(normal_form_4(0.0, 0.07).unwrap().branch, Branch::Outer);
    }
}

//! Time integrators.
//!
//! * Particle chain: Euler-Maruyama,
//!   `X' = X - ∇E(X) Δt + sqrt(2 ε Δt) G`.
//! * Allen-Cahn grid: operator splitting between the stochastic heat
//!   equation (Crank-Nicolson, Neumann Laplacian, direct tridiagonal solve)
//!   and the exact flow of `y' = -(y^3 - y)`. The default symmetric scheme is
//!   heat half step / nonlinear flow over `Δt` / heat half step, each half step
//!   solving
//!
//!   ```text
//!   (I - (γΔt/4) L) X' = (I + (γΔt/4) L) X + (1/2) sqrt(2 ε Δt) G
//!   ```
//!
//!   with one noise field `G` shared by both halves, so a full step carries
//!   exactly `sqrt(2 ε Δt) G` of noise.
//!
//! All randomness comes from an explicit [`RngKey`]; a step is a pure function
//! of `(config, state, key)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ThomasSolver;
use crate::model::{grad_energy_into, ModelKind, ModelParams, State};
use crate::rng::RngKey;

/// Spatial realization of the cylindrical Wiener increment on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum NoiseMode {
    /// Independent standard normals per node scaled by `1/sqrt(Δx)`.
    Grid,
    /// `Σ_{j=0}^{J} G_j e_j(λ_i)` with `e_0 = 1`, `e_j = sqrt(2) cos(jπλ)`.
    Spectral { truncation: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Euler-Maruyama; the only scheme for the chain.
    Euler,
    /// Heat half step, nonlinear flow, heat half step.
    Strang,
    /// One full Crank-Nicolson heat step (`γΔt/2`, noise `sqrt(2εΔt) G`),
    /// then the nonlinear flow.
    Lie,
}

/// Whether the two heat half steps reuse one noise field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSharing {
    Shared,
    /// Independent fields per half step; total per-step variance is then `ε Δt`
    /// instead of `2 ε Δt`. Kept for sensitivity studies.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub params: ModelParams,
    pub scheme: Scheme,
    pub noise: NoiseMode,
    pub noise_sharing: NoiseSharing,
    /// Reserved; the heat solve is direct.
    pub heat_solver_tolerance: f64,
}

impl StepperConfig {
    /// Euler for the chain, symmetric splitting with grid noise for the grid.
    pub fn new(params: ModelParams) -> Self {
        let scheme = match params.kind {
            ModelKind::ParticleChain => Scheme::Euler,
            ModelKind::AllenCahnGrid => Scheme::Strang,
        };
        StepperConfig {
            params,
            scheme,
            noise: NoiseMode::Grid,
            noise_sharing: NoiseSharing::Shared,
            heat_solver_tolerance: 0.0,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_noise_sharing(mut self, sharing: NoiseSharing) -> Self {
        self.noise_sharing = sharing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        match (self.params.kind, self.scheme) {
            (ModelKind::ParticleChain, Scheme::Euler) => {}
            (ModelKind::AllenCahnGrid, Scheme::Strang | Scheme::Lie) => {}
            (kind, scheme) => {
                return Err(Error::InvalidArgument(format!("scheme {scheme:?} does not apply to {kind:?}")))
            }
        }
        if let NoiseMode::Spectral { truncation } = self.noise {
            if truncation > self.params.n {
                return Err(Error::InvalidArgument(format!(
                    "noise truncation J = {truncation} exceeds N = {}",
                    self.params.n
                )));
            }
        }
        Ok(())
    }
}

/// Exact flow of `y' = -(y^3 - y)`: `y0 / sqrt(y0^2 + (1 - y0^2) e^{-2t})`.
pub fn bernoulli_flow(y: f64, t: f64) -> f64 {
    bernoulli_with_decay(y, (-2.0 * t).exp())
}

#[inline]
fn bernoulli_with_decay(y: f64, decay: f64) -> f64 {
    let y2 = y * y;
    y / (y2 + (1.0 - y2) * decay).sqrt()
}

/// A [`StepperConfig`] with its linear systems factored once.
#[derive(Clone, Debug)]
pub struct Stepper {
    cfg: StepperConfig,
    heat: Option<HeatOperator>,
    basis: Option<Vec<f64>>,
    decay: f64,
    noise_scale: f64,
}

/// Crank-Nicolson map `X -> (I - aL)^{-1} ((I + aL) X + noise)`.
#[derive(Clone, Debug)]
struct HeatOperator {
    /// `a / Δx²`
    r: f64,
    solver: ThomasSolver,
}

impl HeatOperator {
    fn new(n: usize, r: f64) -> Result<Self> {
        let mut lower = vec![-r; n];
        let mut upper = vec![-r; n];
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let diag: Vec<f64> = (0..n)
            .map(|i| 1.0 + r * [i > 0, i + 1 < n].iter().filter(|&&b| b).count() as f64)
            .collect();
        Ok(HeatOperator { r, solver: ThomasSolver::new(&lower, &diag, &upper)? })
    }

    fn apply(&self, x: &mut [f64], noise: &[f64], noise_coeff: f64, scratch: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let left = if i == 0 { x[0] } else { x[i - 1] };
            let right = if i + 1 == n { x[n - 1] } else { x[i + 1] };
            scratch[i] = x[i] + self.r * (left - 2.0 * x[i] + right) + noise_coeff * noise[i];
        }
        self.solver.solve_in_place(scratch);
        x.copy_from_slice(scratch);
    }
}

/// Reusable buffers for [`Stepper::step_in_place`].
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    normals: Vec<f64>,
    field: Vec<f64>,
    field2: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace { normals: vec![0.0; 2 * n + 2], field: vec![0.0; n], field2: vec![0.0; n], scratch: vec![0.0; n] }
    }
}

impl Stepper {
    pub fn new(cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let p = &cfg.params;
        let n = p.n;
        let heat = match (p.kind, cfg.scheme) {
            (ModelKind::AllenCahnGrid, Scheme::Strang) => {
                let dx = p.mesh().unwrap();
                Some(HeatOperator::new(n, p.gamma * p.dt / 4.0 / (dx * dx))?)
            }
            (ModelKind::AllenCahnGrid, Scheme::Lie) => {
                let dx = p.mesh().unwrap();
                Some(HeatOperator::new(n, p.gamma * p.dt / 2.0 / (dx * dx))?)
            }
            _ => None,
        };
        let basis = match cfg.noise {
            NoiseMode::Spectral { truncation } => {
                let mut table = Vec::with_capacity((truncation + 1) * n);
                for j in 0..=truncation {
                    for i in 0..n {
                        let lambda = p.node(i);
                        table.push(if j == 0 { 1.0 } else { 2f64.sqrt() * (j as f64 * std::f64::consts::PI * lambda).cos() });
                    }
                }
                Some(table)
            }
            NoiseMode::Grid => None,
        };
        Ok(Stepper {
            cfg,
            heat,
            basis,
            decay: (-2.0 * p.dt).exp(),
            noise_scale: (2.0 * p.epsilon * p.dt).sqrt(),
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.cfg.params
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.cfg.params.n)
    }

    fn field_size(&self) -> usize {
        match self.cfg.noise {
            NoiseMode::Grid => self.cfg.params.n,
            NoiseMode::Spectral { truncation } => truncation + 1,
        }
    }

    /// Builds a spatial noise field from `normals[..field_size]`.
    fn build_field(&self, normals: &[f64], out: &mut [f64]) {
        let p = &self.cfg.params;
        let n = p.n;
        match (&self.basis, p.kind) {
            (Some(table), _) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for (j, g) in normals.iter().enumerate() {
                    let row = &table[j * n..(j + 1) * n];
                    for (o, e) in out.iter_mut().zip(row) {
                        *o += g * e;
                    }
                }
            }
            (None, ModelKind::AllenCahnGrid) => {
                let s = 1.0 / p.mesh().unwrap().sqrt();
                for (o, g) in out.iter_mut().zip(normals) {
                    *o = g * s;
                }
            }
            (None, ModelKind::ParticleChain) => out.copy_from_slice(&normals[..n]),
        }
    }

    /// Spatial white-noise sample for `key`.
    pub fn gaussian_field(&self, key: RngKey) -> State {
        let m = self.field_size();
        let normals = key.normals(m);
        let mut out = vec![0.0; self.cfg.params.n];
        self.build_field(&normals, &mut out);
        State::new(out)
    }

    /// Advances `x` by one step using the noise addressed by `key`.
    pub fn step_in_place(&self, x: &mut [f64], key: RngKey, ws: &mut Workspace) {
        let p = &self.cfg.params;
        let n = p.n;
        let noisy = p.epsilon > 0.0;
        match self.cfg.scheme {
            Scheme::Euler => {
                let grad = &mut ws.scratch;
                grad_energy_into(p, x, grad);
                if noisy {
                    key.fill_normals(&mut ws.normals[..n]);
                }
                for i in 0..n {
                    let noise = if noisy { self.noise_scale * ws.normals[i] } else { 0.0 };
                    x[i] += -grad[i] * p.dt + noise;
                }
            }
            Scheme::Strang => {
                let heat = self.heat.as_ref().expect("heat operator");
                let m = self.field_size();
                let half = 0.5 * self.noise_scale;
                if noisy {
                    let draws = match self.cfg.noise_sharing {
                        NoiseSharing::Shared => m,
                        NoiseSharing::Independent => 2 * m,
                    };
                    key.fill_normals(&mut ws.normals[..draws]);
                    self.build_field(&ws.normals[..m], &mut ws.field);
                    if self.cfg.noise_sharing == NoiseSharing::Independent {
                        let (_, second) = ws.normals.split_at(m);
                        self.build_field(&second[..m], &mut ws.field2);
                    }
                } else {
                    ws.field.iter_mut().for_each(|v| *v = 0.0);
                }
                heat.apply(x, &ws.field, half, &mut ws.scratch);
                self.nonlinear_flow(x);
                let second = match self.cfg.noise_sharing {
                    NoiseSharing::Independent if noisy => &ws.field2,
                    _ => &ws.field,
                };
                heat.apply(x, second, half, &mut ws.scratch);
            }
            Scheme::Lie => {
                let heat = self.heat.as_ref().expect("heat operator");
                let m = self.field_size();
                if noisy {
                    key.fill_normals(&mut ws.normals[..m]);
                    self.build_field(&ws.normals[..m], &mut ws.field);
                } else {
                    ws.field.iter_mut().for_each(|v| *v = 0.0);
                }
                heat.apply(x, &ws.field, self.noise_scale, &mut ws.scratch);
                self.nonlinear_flow(x);
            }
        }
    }

    fn nonlinear_flow(&self, x: &mut [f64]) {
        let p = &self.cfg.params;
        match p.potential {
            crate::model::Potential::DoubleWell => {
                for v in x.iter_mut() {
                    *v = bernoulli_with_decay(*v, self.decay);
                }
            }
            pot => {
                for v in x.iter_mut() {
                    *v = pot.exact_flow(*v, p.dt);
                }
            }
        }
    }

    pub fn step(&self, x: &State, key: RngKey) -> Result<State> {
        self.cfg.params.check_state(x)?;
        let mut out = x.clone();
        let mut ws = self.workspace();
        self.step_in_place(&mut out, key, &mut ws);
        Ok(out)
    }

    /// One Crank-Nicolson half step with an explicit noise field.
    pub fn heat_half_step(&self, x: &State, noise: &State) -> Result<State> {
        if self.cfg.scheme != Scheme::Strang {
            return Err(Error::InvalidArgument("heat half step needs the symmetric splitting scheme".into()));
        }
        self.cfg.params.check_state(x)?;
        if noise.len() != x.len() {
            return Err(Error::InvalidArgument(format!("noise has {} entries, state {}", noise.len(), x.len())));
        }
        let mut out = x.clone();
        let mut scratch = vec![0.0; x.len()];
        self.heat.as_ref().unwrap().apply(&mut out, noise, 0.5 * self.noise_scale, &mut scratch);
        Ok(out)
    }
}

pub fn euler_step(cfg: &StepperConfig, x: &State, key: RngKey) -> Result<State> {
    if cfg.params.kind != ModelKind::ParticleChain || cfg.scheme != Scheme::Euler {
        return Err(Error::InvalidArgument("euler_step needs the particle chain".into()));
    }
    Stepper::new(*cfg)?.step(x, key)
}

pub fn heat_half_step(cfg: &StepperConfig, x: &State, noise: &State) -> Result<State> {
    if cfg.params.kind != ModelKind::AllenCahnGrid {
        return Err(Error::InvalidArgument("heat_half_step needs the grid model".into()));
    }
    Stepper::new(StepperConfig { scheme: Scheme::Strang, ..*cfg })?.heat_half_step(x, noise)
}

pub fn allen_cahn_step(cfg: &StepperConfig, x: &State, key: RngKey) -> Result<State> {
    if cfg.params.kind != ModelKind::AllenCahnGrid {
        return Err(Error::InvalidArgument("allen_cahn_step needs the grid model".into()));
    }
    Stepper::new(*cfg)?.step(x, key)
}

pub fn gaussian_field(cfg: &StepperConfig, key: RngKey) -> Result<State> {
    Ok(Stepper::new(*cfg)?.gaussian_field(key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy, Potential};

    fn grid_cfg(n: usize, gamma: f64, epsilon: f64, dt: f64) -> StepperConfig {
        StepperConfig::new(ModelParams::grid(n, gamma, epsilon, dt).unwrap())
    }

    #[test]
    fn bernoulli_fixed_points_and_sign() {
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(bernoulli_flow(1.0, t), 1.0);
            assert_eq!(bernoulli_flow(-1.0, t), -1.0);
            assert_eq!(bernoulli_flow(0.0, t), 0.0);
        }
        let mut y = 0.05;
        for _ in 0..50 {
            let next = bernoulli_flow(y, 0.1);
            assert!(next > y && next < 1.0);
            y = next;
        }
        assert!(bernoulli_flow(-2.0, 0.1) < -1.0 && bernoulli_flow(-2.0, 0.1) > -2.0);
    }

    #[test]
    fn bernoulli_semigroup() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let y: f64 = rng.random_range(-2.0..2.0);
            let s: f64 = rng.random_range(0.0..2.0);
            let t: f64 = rng.random_range(0.0..2.0);
            let composed = bernoulli_flow(bernoulli_flow(y, s), t);
            assert!((composed - bernoulli_flow(y, s + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_noise_free_at_well_is_fixed() {
        let cfg = StepperConfig::new(ModelParams::chain(5, 0.3, 0.0, 0.01).unwrap());
        let x = State::constant(5, 1.0);
        assert_eq!(euler_step(&cfg, &x, RngKey::new(1, 0, 0, 0)).unwrap(), x);
    }

    #[test]
    fn euler_rejects_grid() {
        let cfg = grid_cfg(5, 1.0, 0.1, 0.01);
        assert!(euler_step(&cfg, &State::zeros(5), RngKey::new(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn euler_gradient_descent_decreases_energy() {
        let p = ModelParams::chain(6, 0.2, 0.0, 0.001).unwrap();
        let stepper = Stepper::new(StepperConfig::new(p)).unwrap();
        let mut x = State::new(vec![-0.9, 0.4, 1.3, -0.2, 0.05, 0.7]);
        let mut e = energy(&p, &x).unwrap();
        for k in 0..1000 {
            x = stepper.step(&x, RngKey::new(0, 0, 0, k)).unwrap();
            let next = energy(&p, &x).unwrap();
            assert!(next <= e);
            e = next;
        }
    }

    #[test]
    fn euler_free_particle_increment_variance() {
        let eps = 0.3;
        let dt = 0.02;
        let p = ModelParams::chain(1, 0.0, eps, dt).unwrap().with_potential(Potential::Flat);
        let stepper = Stepper::new(StepperConfig::new(p)).unwrap();
        let mut ws = stepper.workspace();
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for k in 0..n {
            let mut x = [0.0];
            stepper.step_in_place(&mut x, RngKey::new(9, k as u32, 0, 0), &mut ws);
            sum += x[0];
            sum2 += x[0] * x[0];
        }
        let mean = sum / n as f64;
        let var = (sum2 - n as f64 * mean * mean) / (n - 1) as f64;
        let expected = 2.0 * eps * dt;
        assert!((var / expected - 1.0).abs() < 0.01, "var={var} expected={expected}");
    }

    #[test]
    fn heat_half_step_keeps_constants_and_mass() {
        let cfg = grid_cfg(21, 1.0, 0.0, 0.01);
        let c = State::constant(21, 0.37);
        let out = heat_half_step(&cfg, &c, &State::zeros(21)).unwrap();
        for v in out.iter() {
            assert!((v - 0.37).abs() < 1e-15);
        }
        let x = State::new((0..21).map(|i| ((i * 7919) % 13) as f64 / 6.5 - 1.0).collect());
        let mass: f64 = x.iter().sum();
        let out = heat_half_step(&cfg, &x, &State::zeros(21)).unwrap();
        assert!((out.iter().sum::<f64>() - mass).abs() < 1e-12);
    }

    #[test]
    fn heat_half_step_damps_cosine_mode_by_cn_factor() {
        let n = 26;
        let (gamma, dt) = (1.0, 0.02);
        let cfg = grid_cfg(n, gamma, 0.0, dt);
        let dx = cfg.params.mesh().unwrap();
        // Eigenvector of the mirrored-ghost Laplacian: cos(π(i + 1/2)/N).
        let mode: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos()).collect();
        // Eigenvalue by direct application of L to the mode.
        let lap = |i: usize| {
            let l = if i == 0 { mode[0] } else { mode[i - 1] };
            let r = if i + 1 == n { mode[n - 1] } else { mode[i + 1] };
            (l - 2.0 * mode[i] + r) / (dx * dx)
        };
        let mu = -lap(3) / mode[3];
        for i in 0..n {
            assert!((lap(i) + mu * mode[i]).abs() < 1e-9);
        }
        let a = gamma * dt / 4.0 * mu;
        let factor = (1.0 - a) / (1.0 + a);
        let out = heat_half_step(&cfg, &State::new(mode.clone()), &State::zeros(n)).unwrap();
        for i in 0..n {
            assert!((out[i] - factor * mode[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn allen_cahn_noise_free_equilibria_and_relaxation() {
        let cfg = grid_cfg(26, 1.0, 0.0, 0.02);
        let minus = State::constant(26, -1.0);
        let out = allen_cahn_step(&cfg, &minus, RngKey::new(0, 0, 0, 0)).unwrap();
        for v in out.iter() {
            assert!((v + 1.0).abs() < 1e-15);
        }
        let stepper = Stepper::new(cfg).unwrap();
        let mut x = State::constant(26, 0.1);
        let mut prev = 0.1;
        for k in 0..500 {
            x = stepper.step(&x, RngKey::new(0, 0, 0, k)).unwrap();
            let v = x[0];
            assert!(x.iter().all(|&y| (y - v).abs() < 1e-12));
            assert!(v > prev && v <= 1.0);
            prev = v;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn allen_cahn_without_coupling_is_exact_flow() {
        let cfg = grid_cfg(7, 0.0, 0.0, 0.05);
        let x = State::new(vec![-1.5, -0.3, 0.0, 0.2, 0.9, 1.4, 0.01]);
        let out = allen_cahn_step(&cfg, &x, RngKey::new(0, 0, 0, 0)).unwrap();
        for (o, v) in out.iter().zip(x.iter()) {
            assert!((o - bernoulli_flow(*v, 0.05)).abs() < 1e-15);
        }
    }

    #[test]
    fn steps_are_deterministic_in_key() {
        let cfg = grid_cfg(26, 1.0, 0.05, 0.02);
        let x = State::constant(26, -0.8);
        let k = RngKey::new(3, 1, 4, 1);
        assert_eq!(allen_cahn_step(&cfg, &x, k).unwrap(), allen_cahn_step(&cfg, &x, k).unwrap());
        assert_ne!(allen_cahn_step(&cfg, &x, k).unwrap(), allen_cahn_step(&cfg, &x, k.at_step(2)).unwrap());
    }

    #[test]
    fn spectral_truncation_zero_is_constant() {
        let cfg = grid_cfg(11, 1.0, 0.05, 0.02).with_noise(NoiseMode::Spectral { truncation: 0 });
        let g = gaussian_field(&cfg, RngKey::new(1, 2, 3, 4)).unwrap();
        assert!(g.iter().all(|&v| v == g[0]));
        let bad = grid_cfg(11, 1.0, 0.05, 0.02).with_noise(NoiseMode::Spectral { truncation: 12 });
        assert!(matches!(gaussian_field(&bad, RngKey::new(0, 0, 0, 0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_field_variance_and_independence() {
        let cfg = grid_cfg(51, 1.0, 0.05, 0.01);
        let stepper = Stepper::new(cfg).unwrap();
        let samples = 100_000u64;
        let n = 51;
        let mut sum = vec![0.0; n];
        let mut sum2 = vec![0.0; n];
        let mut cross = 0.0;
        let mut other2 = 0.0;
        for k in 0..samples {
            let g = stepper.gaussian_field(RngKey::new(11, 0, 0, k));
            let h = stepper.gaussian_field(RngKey::new(11, 1, 0, k));
            for i in 0..n {
                sum[i] += g[i];
                sum2[i] += g[i] * g[i];
            }
            cross += g[10] * h[10];
            other2 += h[10] * h[10];
        }
        let s = samples as f64;
        for i in 0..n {
            let mean = sum[i] / s;
            let var = sum2[i] / s - mean * mean;
            assert!((var / 50.0 - 1.0).abs() < 0.02, "node {i}: var {var}");
            assert!(mean.abs() < 4.0 * (50.0 / s).sqrt());
        }
        let corr = cross / (sum2[10] * other2).sqrt();
        assert!(corr.abs() < 0.01);
    }

    #[test]
    fn independent_half_noise_halves_the_variance() {
        let p = ModelParams::grid(11, 0.0, 0.1, 0.01).unwrap().with_potential(Potential::Flat);
        let shared = Stepper::new(StepperConfig::new(p)).unwrap();
        let indep = Stepper::new(StepperConfig::new(p).with_noise_sharing(NoiseSharing::Independent)).unwrap();
        let dx = p.mesh().unwrap();
        let samples = 40_000u64;
        let (mut vs, mut vi) = (0.0, 0.0);
        for k in 0..samples {
            let key = RngKey::new(2, k as u32, 0, 0);
            let a = shared.step(&State::zeros(11), key).unwrap();
            let b = indep.step(&State::zeros(11), key).unwrap();
            vs += a.iter().map(|v| v * v).sum::<f64>();
            vi += b.iter().map(|v| v * v).sum::<f64>();
        }
        let target = 2.0 * 0.1 * 0.01 / dx;
        let vs = vs / (samples as f64 * 11.0);
        let vi = vi / (samples as f64 * 11.0);
        assert!((vs / target - 1.0).abs() < 0.03);
        assert!((vi / (target / 2.0) - 1.0).abs() < 0.03);
    }

    #[test]
    fn noise_free_splitting_dissipates_energy() {
        use rand::{Rng, SeedableRng};
        let p = ModelParams::grid(26, 1.0, 0.0, 0.01).unwrap();
        let stepper = Stepper::new(StepperConfig::new(p)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let x = State::new((0..26).map(|_| rng.random_range(-1.5..1.5)).collect());
            let e0 = energy(&p, &x).unwrap();
            let y = stepper.step(&x, RngKey::new(0, 0, 0, 0)).unwrap();
            let e1 = energy(&p, &y).unwrap();
            assert!(e1 <= e0 + 1e-10, "{e0} -> {e1}");
        }
    }
}

//! Potentials, discrete energies and their derivatives.
//!
//! Both model kinds share one energy of the form
//!
//! ```text
//! E(x) = (c/2) Σ_{i=1}^{N-1} (x_{i+1} - x_i)^2 + w Σ_{i=1}^{N} V(x_i)
//! ```
//!
//! with mirror ghosts `x_0 = x_1`, `x_{N+1} = x_N` (discrete Neumann condition,
//! so the two boundary coupling terms vanish). The coefficients are
//!
//! | kind             | coupling `c` | weight `w` |
//! |------------------|--------------|------------|
//! | particle chain   | `γ N`        | `1 / N`    |
//! | Allen-Cahn grid  | `γ / Δx`     | `Δx`       |
//!
//! where `Δx = 1/(N-1)` is the grid spacing with nodes at `λ_i = i Δx`.
//! Dividing by `w` gives the normalized two-parameter form
//! `V(x_1) + ... + V(x_N) + (κ/2) Σ (x_{i+1} - x_i)^2` with `κ = c / w`
//! (see [`ModelParams::coupling_kappa`]); for the two-particle chain this is
//! `κ = 4γ`, the form in which the bifurcation analysis is carried out.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;

/// On-site potential `V : R -> R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Potential {
    /// `V(x) = x^4/4 - x^2/2`, wells at ±1.
    DoubleWell,
    /// `V(x) = k x^2 / 2`.
    Quadratic { stiffness: f64 },
    /// `V = 0`; turns the dynamics into a (stochastic) heat equation.
    Flat,
}

impl Potential {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Potential::DoubleWell => {
                let x2 = x * x;
                0.25 * x2 * x2 - 0.5 * x2
            }
            Potential::Quadratic { stiffness } => 0.5 * stiffness * x * x,
            Potential::Flat => 0.0,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            Potential::DoubleWell => x * x * x - x,
            Potential::Quadratic { stiffness } => stiffness * x,
            Potential::Flat => 0.0,
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            Potential::DoubleWell => 3.0 * x * x - 1.0,
            Potential::Quadratic { stiffness } => stiffness,
            Potential::Flat => 0.0,
        }
    }

    pub fn d3(&self, x: f64) -> f64 {
        match *self {
            Potential::DoubleWell => 6.0 * x,
            Potential::Quadratic { .. } | Potential::Flat => 0.0,
        }
    }

    /// Smallest `α ≥ 2` with `|V^{(j)}(x)| <= C (|x|^{2α-1} + 1)` for `j = 0..3`.
    pub fn growth_exponent(&self) -> f64 {
        match self {
            Potential::DoubleWell => 2.5,
            Potential::Quadratic { .. } | Potential::Flat => 2.0,
        }
    }

    /// Exact solution at time `t` of `y' = -V'(y)`, `y(0) = y0`.
    pub fn exact_flow(&self, y0: f64, t: f64) -> f64 {
        match *self {
            Potential::DoubleWell => crate::dynamics::bernoulli_flow(y0, t),
            Potential::Quadratic { stiffness } => y0 * (-stiffness * t).exp(),
            Potential::Flat => y0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    ParticleChain,
    AllenCahnGrid,
}

/// Physical and discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Atom count (chain) or node count (grid).
    pub n: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub potential: Potential,
}

impl ModelParams {
    pub fn chain(n: usize, gamma: f64, epsilon: f64, dt: f64) -> Result<Self> {
        let p = ModelParams {
            kind: ModelKind::ParticleChain,
            n,
            gamma,
            epsilon,
            dt,
            potential: Potential::DoubleWell,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(n: usize, gamma: f64, epsilon: f64, dt: f64) -> Result<Self> {
        let p = ModelParams {
            kind: ModelKind::AllenCahnGrid,
            n,
            gamma,
            epsilon,
            dt,
            potential: Potential::DoubleWell,
        };
        p.validate()?;
        Ok(p)
    }

    /// Grid model from its mesh size; `1/dx` must be an integer.
    pub fn grid_with_dx(dx: f64, gamma: f64, epsilon: f64, dt: f64) -> Result<Self> {
        if !(dx > 0.0 && dx <= 1.0) {
            return Err(Error::InvalidArgument(format!("mesh size {dx} outside (0, 1]")));
        }
        let cells = (1.0 / dx).round();
        if ((1.0 / cells) - dx).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("1/dx = {} is not an integer", 1.0 / dx)));
        }
        Self::grid(cells as usize + 1, gamma, epsilon, dt)
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = match self.kind {
            ModelKind::ParticleChain => 1,
            ModelKind::AllenCahnGrid => 2,
        };
        if self.n < min_n {
            return Err(Error::InvalidArgument(format!(
                "N = {} below minimum {min_n} for {:?}",
                self.n, self.kind
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be > 0", self.dt)));
        }
        if let Potential::Quadratic { stiffness } = self.potential {
            if !stiffness.is_finite() {
                return Err(Error::InvalidArgument("non-finite stiffness".into()));
            }
        }
        Ok(())
    }

    /// Grid spacing `1/(N-1)`; `None` for the chain.
    pub fn mesh(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ParticleChain => None,
            ModelKind::AllenCahnGrid => Some(1.0 / (self.n - 1) as f64),
        }
    }

    /// Grid coordinate of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        match self.mesh() {
            Some(dx) => i as f64 * dx,
            None => (i as f64 + 0.5) / self.n as f64,
        }
    }

    /// Coefficient `c` in front of the nearest-neighbour coupling.
    pub fn coupling_coefficient(&self) -> f64 {
        match self.kind {
            ModelKind::ParticleChain => self.gamma * self.n as f64,
            ModelKind::AllenCahnGrid => self.gamma / self.mesh().unwrap(),
        }
    }

    /// Quadrature weight `w` in front of the on-site potential sum.
    pub fn site_weight(&self) -> f64 {
        match self.kind {
            ModelKind::ParticleChain => 1.0 / self.n as f64,
            ModelKind::AllenCahnGrid => self.mesh().unwrap(),
        }
    }

    /// Normalized coupling `κ = c / w`, so that `E / w = Σ V(x_i) + (κ/2) Σ (Δx_i)^2`.
    ///
    /// Chain: `κ = γ N²` (two particles: `κ = 4γ`). Grid: `κ = γ / Δx²`.
    pub fn coupling_kappa(&self) -> f64 {
        self.coupling_coefficient() / self.site_weight()
    }

    /// Chain rigidity `γ` giving normalized coupling `kappa` for `n` atoms.
    pub fn chain_gamma_for_kappa(n: usize, kappa: f64) -> f64 {
        kappa / (n * n) as f64
    }

    pub fn check_state(&self, x: &State) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidState(format!(
                "state has {} entries, model expects {}",
                x.len(),
                self.n
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("entry {i} is not finite")));
        }
        Ok(())
    }
}

/// Configuration vector: particle positions or grid values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        State(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for State {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        State(v)
    }
}

pub fn energy(params: &ModelParams, x: &State) -> Result<f64> {
    let (dirichlet, potential) = energy_split(params, x)?;
    Ok(params.gamma * dirichlet + potential)
}

/// Returns `(D, V)` with `E = γ D + V`.
pub fn energy_split(params: &ModelParams, x: &State) -> Result<(f64, f64)> {
    params.check_state(x)?;
    let jumps: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let on_site: f64 = x.iter().map(|&v| params.potential.value(v)).sum();
    // c / γ, written out so that γ = 0 still yields D.
    let stiffness = match params.kind {
        ModelKind::ParticleChain => params.n as f64,
        ModelKind::AllenCahnGrid => 1.0 / params.mesh().unwrap(),
    };
    Ok((0.5 * stiffness * jumps, params.site_weight() * on_site))
}

pub fn grad_energy(params: &ModelParams, x: &State) -> Result<State> {
    params.check_state(x)?;
    let mut g = State::zeros(params.n);
    grad_energy_into(params, x, &mut g);
    Ok(g)
}

/// Unchecked gradient kernel used by the integrators.
pub(crate) fn grad_energy_into(params: &ModelParams, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let c = params.coupling_coefficient();
    let w = params.site_weight();
    for i in 0..n {
        let left = if i == 0 { x[0] } else { x[i - 1] };
        let right = if i + 1 == n { x[n - 1] } else { x[i + 1] };
        out[i] = c * (2.0 * x[i] - left - right) + w * params.potential.d1(x[i]);
    }
}

/// Analytic Hessian; tridiagonal because the coupling is nearest-neighbour.
pub fn hessian_energy(params: &ModelParams, x: &State) -> Result<SymTridiagonal> {
    params.check_state(x)?;
    let n = params.n;
    let c = params.coupling_coefficient();
    let w = params.site_weight();
    let diag = (0..n)
        .map(|i| {
            let neighbours = [i > 0, i + 1 < n].iter().filter(|&&b| b).count() as f64;
            c * neighbours + w * params.potential.d2(x[i])
        })
        .collect();
    let off = vec![-c; n.saturating_sub(1)];
    Ok(SymTridiagonal::new(diag, off))
}

/// `-E(x)/ε`, the log of the Gibbs density up to its normalization.
pub fn log_gibbs_density_unnormalized(params: &ModelParams, x: &State) -> Result<f64> {
    if params.epsilon == 0.0 {
        return Err(Error::DivisionByZero("Gibbs density at epsilon = 0".into()));
    }
    Ok(-energy(params, x)? / params.epsilon)
}

/// Deterministic drift of the dynamics: `-∇E` for the chain, the
/// `L²(0,1)` gradient `-∇E / Δx` for the grid.
pub fn drift(params: &ModelParams, x: &State) -> Result<State> {
    let mut g = grad_energy(params, x)?;
    let scale = match params.mesh() {
        Some(dx) => -1.0 / dx,
        None => -1.0,
    };
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

/// Discrete Freidlin-Wentzell action
/// `(1/4) Σ_k |(x_{k+1} - x_k)/Δt - b(x_k)|² Δt`, with `b` the drift
/// evaluated at the left endpoint. It vanishes on the explicit gradient flow
/// `x_{k+1} = x_k + b(x_k) Δt`. The grid kind uses the `Δx`-weighted norm.
pub fn rate_functional(params: &ModelParams, traj: &[State], dt: f64) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate functional needs at least 2 states, got {}",
            traj.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be > 0")));
    }
    let weight = params.mesh().unwrap_or(1.0);
    let mut action = 0.0;
    for pair in traj.windows(2) {
        let b = drift(params, &pair[0])?;
        params.check_state(&pair[1])?;
        let sq: f64 = pair[1]
            .iter()
            .zip(pair[0].iter())
            .zip(b.iter())
            .map(|((next, cur), bi)| ((next - cur) / dt - bi).powi(2))
            .sum();
        action += 0.25 * weight * sq * dt;
    }
    Ok(action)
}

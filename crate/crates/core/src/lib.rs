//! Adaptive multilevel splitting for rare transitions between metastable
//! states of overdamped gradient systems.
//!
//! Two families of models share one energy `E(x) = (c/2) Σ (x_{i+1} - x_i)^2 + w Σ V(x_i)`
//! with mirrored boundary nodes:
//!
//! * the particle chain, `N` particles with `c = γN`, `w = 1/N`,
//!   advanced by Euler-Maruyama;
//! * the finite-difference Allen-Cahn equation on `[0, 1]` with
//!   `c = γ/Δx`, `w = Δx`, advanced by a Crank-Nicolson/Bernoulli splitting
//!   driven by space-time white noise.
//!
//! [`rare_event::ams_estimate`] estimates `P(τ_B < τ_A)` for the mean
//! magnetization and returns the reactive trajectories;
//! [`rare_event::direct_mc_estimate`] is the brute-force reference.
//! [`bifurcation`] locates and classifies the critical points of the
//! two-particle energy and the four-particle spectrum at the origin.
//! [`experiments`] wraps everything into reproducible runs driven by TOML
//! configurations, with CSV outputs and replayable manifests.
//!
//! All randomness is counter based ([`rng::RngKey`]): a Gaussian increment is a
//! pure function of `(seed, replica, generation, step)`, so results do not
//! depend on the number of worker threads.
//!
//! ```
//! use amsim::dynamics::StepperConfig;
//! use amsim::model::{ModelParams, State};
//! use amsim::rare_event::{ams_estimate, AmsConfig};
//!
//! let params = ModelParams::chain(1, 0.0, 0.1, 0.01)?;
//! let cfg = AmsConfig::new(StepperConfig::new(params), State::constant(1, -0.8), -0.9, 0.9, 20, 1);
//! let out = ams_estimate(&cfg)?;
//! assert!(out.estimate > 0.0 && out.estimate < 1.0);
//! assert_eq!(out.reactive_trajectories.len(), 20);
//! # Ok::<(), amsim::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod dynamics;
pub mod experiments;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rare_event;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

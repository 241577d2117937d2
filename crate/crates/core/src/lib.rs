//! Spectral Galerkin discretisation and tamed exponential time stepping for the
//! stochastic Burgers–Huxley equation
//!
//! ```text
//! du = (u_xx + u u_x + ν u (1 − u)(u − θ)) dt + dW,   x ∈ (0, 1),  u(t, 0) = u(t, 1) = 0,
//! ```
//!
//! driven by additive space-time white noise, together with a Monte-Carlo
//! harness that estimates strong errors by comparing coupled coarse and fine
//! trajectories on the same Brownian path.
//!
//! Module map:
//!
//! * [`basis`]: sine eigenbasis, transforms, norms and the heat semigroup.
//! * [`nonlinear`]: Galerkin projections of the Burgers and cubic drifts.
//! * [`noise`]: counter-based sampling of exact per-mode convolution increments.
//! * [`integrator`]: the fully discrete tamed exponential scheme.
//! * [`harness`]: coupled error estimation and convergence-rate tables.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod noise;
pub mod nonlinear;
mod summation;

pub use basis::{eigenvalue, Discretization, GridField, SpectralField};
pub use error::{Error, Result};
pub use harness::{run_study, ConvergenceReport, StudyConfig};
pub use integrator::{simulate, StepOperators, TrajectoryResult};
pub use noise::{NoiseSource, NoiseStream};
pub use nonlinear::{InitialCondition, ModelParams};

//! Numerical laboratory for the mass-conserved Allen-Cahn equation
//!
//! ```text
//! u_t = Δu + ε⁻² (f(u) − ε λ_ε(t)),   λ_ε(t) = (1/ε) ⨍_Ω f(u),   ∂_ν u = 0
//! ```
//!
//! and its sharp-interface limit, volume-preserving mean curvature flow.
//!
//! The crate is organised bottom-up:
//!
//! - [`potential`]: double equal-well nonlinearities `f = −F'`.
//! - [`profile`]: the heteroclinic profile θ₀, the corrector θ₁ and the
//!   linearized operator `L = −∂² − f'(θ₀)`.
//! - [`geometry`]: signed distances, curvature, tubular coordinates.
//! - [`frontflow`]: marker and radial solvers for the limit flow.
//! - [`acsolver`]: the conservative IMEX phase-field solver.
//! - [`spectrum`]: the linearized operator around the interface ansatz.
//! - [`analysis`]: inequality probes, ansatz residuals and ε-studies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acsolver;
pub mod analysis;
pub mod error;
pub mod frontflow;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod potential;
pub mod profile;
pub mod spectrum;

pub use acsolver::{
    lambda_of, prepare_initial, run, step, zero_level, LinearSolver, ScalarField, SimConfig,
    Stepper, Trajectory,
};
pub use error::{Error, Result};
pub use frontflow::{
    radial_integrate, radial_rhs, step_front, vpmcf_velocity, FlowDiagnostics, FrontCurve,
    RadialState,
};
pub use geometry::{jacobian, signed_distance, GridSpec, LevelFunction, Polyline, Shape, TubularChart};
pub use potential::DoubleWell;
pub use profile::{compute_theta0, compute_theta1, decay_rate, solve_linearized, CorrectorProfile, WaveProfile};
pub use spectrum::{assemble, build_psi, min_rayleigh, sweep, ProfileAnsatz, SpectralReport};

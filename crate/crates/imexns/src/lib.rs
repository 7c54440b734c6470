//! Implicit–explicit (IMEX) time integration for advection–diffusion systems
//! with solution-dependent diffusivity, together with a Fourier pseudo-spectral
//! incompressible Navier–Stokes solver and the measurement tooling needed to
//! verify the schemes end to end.
//!
//! The crate is organised bottom-up:
//!
//! - [`ratio`], [`dd`], [`scalar`]: exact rational coefficient storage and
//!   double-double arithmetic, behind a small [`scalar::Field`] abstraction so
//!   every ODE-level algorithm can run in either f64 or ~31-digit precision.
//! - [`tableaux`]: the built-in IMEX Runge–Kutta pairs (two-register
//!   low-storage family plus a trapezoidal and an additive third-order pair)
//!   with structural validation.
//! - [`quadrature`]: Gauss–Lobatto–Legendre grids and the per-subinterval
//!   integration weights used by spectral deferred corrections.
//! - [`integrators`]: IMEX Euler, fixed-step BDF2, and the IMEX-RK step for
//!   constant and solution-dependent diffusivity.
//! - [`sdc`]: semi-implicit spectral deferred corrections on Lobatto nodes.
//! - [`stability`]: one-step amplification factors, stability/accuracy domain
//!   scans, critical imaginary extents, and empirical consistency orders.
//! - [`spectral`], [`flow`]: periodic pseudo-spectral fields, dealiased
//!   tendencies, pressure projection, variable-coefficient Helmholtz solves,
//!   and the three flow steppers (BDF2, IMEX-RK, SDC).
//! - [`harness`]: error norms, empirical convergence orders, convergence-table
//!   and critical-step-size drivers with deterministic CSV output.
//!
//! The `parallel` feature (on by default) dispatches the data-parallel cores
//! (domain scans, pointwise spectral kernels, FFT line batches, and the
//! convergence work pool) through rayon; with the feature disabled the same
//! code paths run sequentially.

pub mod dd;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod par;
pub mod quadrature;
pub mod ratio;
pub mod scalar;
pub mod sdc;
pub mod spectral;
pub mod stability;
pub mod tableaux;

pub mod flow;

pub use error::{Error, Result};

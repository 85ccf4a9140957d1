//! Spectral and Monte Carlo tools for evolution equations `∂_t u = A(t)u + f`
//! whose generator `A(t)` is the Fourier multiplier of a time-dependent
//! exponent `Ψ(t, ξ)` of a process with independent increments.
//!
//! Modules:
//! - [`symbols`]: scale functions `φ`, exponents `Ψ`, and structural audits.
//! - [`spectral`]: periodic grids and FFT plumbing.
//! - [`kernels`]: transition densities, rescaled kernels and their estimates.
//! - [`solver`]: exponential time differencing solver, norms, weak residuals.
//! - [`stochastic`]: samplers, characteristic-function checks, Monte Carlo solutions.
//! - [`maximal`]: parabolic cubes, dyadic filtrations, sharp and maximal functions.
//! - [`registry`]: named model instances.

pub mod error;
pub mod io;
pub mod kernels;
pub mod maximal;
pub mod par;
pub mod registry;
pub mod solver;
pub mod spectral;
pub mod stochastic;
pub mod symbols;

pub use error::{Error, Result};

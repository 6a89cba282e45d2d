//! Numerical toolkit for linear and semilinear stochastic Volterra equations
//! `u = g + k * (A u + F(u)) + h * σ(u) dW` with fractional or completely
//! monotone kernels: resolvent families, solvability conditions, ensemble
//! simulation and limit-distribution diagnostics.

pub mod conditions;
pub mod error;
pub mod grid;
pub mod jsonf64;
pub mod kernel;
pub mod limitdist;
pub mod mlf;
pub mod quad;
pub mod simulator;
pub mod special;
pub mod spectral;
pub mod stats;
mod par;
pub mod volterra1d;

pub use error::{Error, Result};

//! High-order steady-state diffusion approximations for one-dimensional Markov chains.
//!
//! A chain is described by its conditional jump moments `m_k(x) = E(Δ^k | W = x)`.
//! From these the crate builds diffusion coefficients `v`, the stationary density
//! `κ/v(x) · exp(∫₀ˣ b/v)`, and compares it against exact or simulated references.

pub mod coefficients;
pub mod density;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod models;
pub mod poly;
pub mod quadrature;
pub mod stein;

pub use error::{Error, Result};

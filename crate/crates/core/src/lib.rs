//! Monotone wide-stencil solver for the complex Monge-Ampere Dirichlet problem
//! `(dd^c u)^n = f beta^n` in `Omega`, `u = phi` on the boundary, on strongly
//! hyperconvex Lipschitz domains, with barrier constructions and empirical
//! regularity measurements.

pub mod analysis;
pub mod barriers;
pub mod cli;
pub mod config;
pub mod data;
pub mod domain;
pub mod error;
pub mod grid;
pub mod hermitian;
pub mod modulus;
pub mod sampling;
mod screen;
pub mod solver;
pub mod stencil;
pub mod verify;

pub use error::{Error, Result};

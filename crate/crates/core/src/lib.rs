//! Numerics for dispersion-managed solitons of the averaged
//! equation with vanishing average dispersion.
//!
//! The crate is `no_std` and only needs `alloc`. Everything is expressed on a
//! uniform periodic grid (see [`grid`]); the free Schrödinger group
//! `T_r = exp(i r ∂ₓ²)` acts as the Fourier multiplier `exp(-i r ξ²)`.
//!
//! * [`qfunc`] evaluates the averaged nonlinearity `Q(v₁,v₂,v₃)` and the
//!   quadrilinear functional `𝒬(f₁,f₂,f₃,f₄)` through a space-time route, a
//!   frequency-lattice route and a space-kernel route.
//! * [`solver`] computes mass-constrained maximizers (DM solitons).
//! * [`weighted`] holds the exponential weights, twisted functionals and
//!   decay diagnostics.
//! * [`evolution`] integrates the full dispersion-managed NLS and the
//!   averaged equation.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod evolution;
mod fft;
pub mod fit;
pub mod grid;
pub mod qfunc;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod weighted;

pub use error::{Error, Result};
pub use grid::{make_grid, ComplexField, Grid, Side};
pub use num_complex::Complex64;
pub use quadrature::SQuadrature;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Numerical functional calculus for the Bessel operator
//! `L = -d²/dx² - (r/x) d/dx` on `((0,∞), x^r dx)`.
//!
//! The crate realizes the Fourier–Bessel transform on composite Gauss grids,
//! spectral multipliers `m(√L)` (heat semigroup, finite-propagation
//! mollifiers, imaginary powers `L^{iα}`), the generalized translation and
//! convolution, a dyadic Calderón–Zygmund decomposition, and sweep harnesses
//! that measure how `L^{iα}` norms grow with `α`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod calculus;
pub mod czd;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod grid;
pub mod measure;
pub mod selftest;
mod rules;
pub mod transform;
pub mod translation;

pub use error::{Error, Result};

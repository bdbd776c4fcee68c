//! Spectral laboratory for the semiclassical fractional logarithmic
//! Schrödinger equation
//!
//! ```text
//! ε^{2s}(−Δ)^s u + V(x) u = u log u²,   x ∈ R^N,
//! ```
//!
//! computed on a periodic box through its penalized form, together with
//! the constant-potential limiting problem and numerical checks of the
//! fractional Gagliardo–Nirenberg, logarithmic Sobolev and Hardy
//! inequalities.

pub mod error;
pub mod field;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod model;
pub mod semiclassics;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{FractionalOrder, Grid, Power};

//! Computational toolkit for free Poisson algebras.
//!
//! The crate covers noncrossing-partition combinatorics, noncommutative
//! probability spaces with free cumulants, pseudo Hilbert algebras and their
//! full Fock space realisations (fields, Wick products, modular data),
//! Cauchy and cumulant transforms of free Levy laws, second quantisation of
//! completely positive maps, isomorphism-class bookkeeping for the resulting
//! von Neumann algebras, and the quadratic-variation experiments for free
//! Levy processes.
//!
//! Every algebraic routine is generic over [`Scalar`], so the same code runs
//! in exact rational arithmetic ([`Rational`]) and in `f64` complex
//! arithmetic ([`Complex64`]).

pub mod classify;
pub mod error;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod ncpart;
pub mod ncps;
pub mod quadrature;
pub mod quantize;
pub mod scalar;
pub mod transforms;
pub mod variation;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use ncpart::NcPartition;
pub use num_complex::Complex64;
pub use scalar::{Rational, Scalar};

/// Default equality tolerance for floating-point comparisons.
pub const FLOAT_TOL: f64 = 1e-10;

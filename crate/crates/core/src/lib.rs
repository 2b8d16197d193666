//! Multiple operator integrals and higher derivatives of operator functions.
//!
//! The crate works with finite-dimensional self-adjoint and unitary operators,
//! where spectral measures are finite families of eigenprojections. It provides:
//!
//! - [`scalar_functions`]: closed-form functions on the line and the circle,
//!   and confluent divided differences of any order.
//! - [`spectral`]: Hermitian/unitary eigendecomposition and functional calculus.
//! - [`moi`]: double and multiple operator integrals, dense and separable.
//! - [`derivatives_selfadjoint`] / [`derivatives_unitary`]: derivative formulas
//!   for `t -> phi(A + tK)` and `t -> phi(exp(itA) U)` with independent oracles.
//! - [`besov`]: Littlewood-Paley pieces, Besov seminorms and related kernels.
//! - [`cli`]: parsers and report generation behind the `opint` binary.

pub mod besov;
pub mod cli;
pub mod derivatives_selfadjoint;
pub mod derivatives_unitary;
mod error;
pub mod finite_difference;
pub mod moi;
pub mod random;
pub mod scalar_functions;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

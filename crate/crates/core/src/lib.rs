//! Desk-scale simulator and cost model for Hamiltonian dynamics driven by
//! product-of-reflections quantum walks.
//!
//! The crate builds the walk operator attached to a black-box Hamiltonian,
//! simulates the lazy evolution it generates as an explicit quantum
//! channel, measures trace distance against exact matrix evolution, and
//! bills every oracle query the modeled algorithm would make. All core
//! types are generic over the scalar via [`scalar::Real`]; the aliases at
//! the crate root pin the two concrete precisions.

pub mod decompose;
pub mod eigen;
pub mod ensembles;
pub mod experiments;
pub mod error;
pub mod matrix;
pub mod numerics;
pub mod oracle;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod stateprep;
pub mod walk;

pub use error::{Error, Result};

/// Double-precision matrix, the default everywhere.
pub type Matrix64 = matrix::ComplexMatrix<f64>;
/// Single-precision matrix.
pub type Matrix32 = matrix::ComplexMatrix<f32>;
/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex scalar.
pub type C32 = num_complex::Complex<f32>;

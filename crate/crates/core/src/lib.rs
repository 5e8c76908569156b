//! Finite-dimensional bosonic Fock space toolkit.
//!
//! The crate models a one-particle space `C^d`, the symmetric tensor powers
//! that make up its Fock space, polynomial phase-space symbols with their
//! Poisson-bracket algebra, epsilon-scaled Wick quantization, exact sector-wise
//! quantum propagation, the Hartree flow, the iterated-bracket Dyson series
//! with its convergence envelopes, and Wigner-measure transport.
//!
//! Everything is sized for desk-scale experiments: `d <= 3`, particle sectors
//! up to a few hundred, kernels stored dense in the occupation-number basis.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod symbols;
pub mod symtensor;
pub mod wigner;

pub use error::CoreError;
pub use symtensor::{MultiIndex, SymOperator, SymVector};

/// Double-precision complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

//! meanlab: weighted operator means on symmetric positive-definite matrices.
//!
//! - [`symmat`]: symmetric matrices, Jacobi spectral decomposition, matrix
//!   functions, Loewner-order predicates.
//! - [`means`]: weighted arithmetic, geometric and harmonic means of two
//!   operators, complements `I − A`, and the block-PSD certificate of `A ♯ B`.
//! - [`series`]: binomial-series expansion of the arithmetic–geometric gap.
//! - [`iterative`]: the arithmetic–harmonic and `T_n` iterations, the power
//!   geometric mean `Φ_{1/m}`, and recursive m-operator means.
//! - [`alzer`]: scalar and operator Alzer-type inequality checks plus the
//!   seeded experiment engine.
//! - [`gen`]: seeded ensembles of positive-definite matrices.

pub mod alzer;
pub mod error;
pub mod gen;
pub mod iterative;
pub mod json;
pub mod means;
pub mod series;
pub mod symmat;

pub use error::{Error, Result};
pub use means::Weight;
pub use symmat::{Matrix, PsdCheck, SpectralDecomposition, SymMatrix, Tolerance};

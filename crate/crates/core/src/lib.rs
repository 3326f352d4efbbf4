//! Finite-dimensional quantum theory built up from amplitude sum and product rules.
//!
//! The crate is organised bottom-up:
//!
//! - [`logic`]: outcomes, measurements, sequences and the series (`∙`),
//!   parallel (`∨`) and composition (`⊙`) operators.
//! - [`amplitude`]: the generative amplitude model and the sum, product and
//!   probability rules, including temporal inversion.
//! - [`state`]: states, transformation matrices, prepared states, the Born
//!   rule, Hermitian measurement operators, unitary evolution and tensor
//!   product states, all reconstructed from an amplitude model.
//! - [`disturbance`]: trivial-measurement insertion, quantum versus classical
//!   predictions, and a seeded Monte-Carlo frequency estimator.
//! - [`composition`]: numerical checks of the functional equations that force
//!   the composite amplitude rule `F(u, v) = uv`.
//! - [`action`]: discretized paths, classical action, `z = e^{iαS}` and a
//!   lattice sum-over-paths propagator.
//!
//! [`identities`] generates random operand tuples and checks the algebraic
//! identities of the operators as structural sequence equality.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod action;
pub mod amplitude;
pub mod composition;
pub mod disturbance;
pub mod identities;
pub mod linalg;
pub mod logic;
pub mod random;
pub mod state;

pub use num_complex::Complex64;

/// Unitarity tolerance for stored and derived transformation matrices.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for probability identities (sum/product rules, normalization).
pub const PROBABILITY_TOL: f64 = 1e-12;
/// Largest measurement dimension in the validated regime.
pub const MAX_DIM: usize = 64;

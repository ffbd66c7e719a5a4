//! Training small quantum neural networks with an inverse-probability
//! algebraic correction.
//!
//! The crate is organised bottom-up:
//!
//! - [`statesim`]: dense statevector and density-matrix simulation with the
//!   gate set `{Rx, Ry, CNOT, Z}` and a single-qubit dephasing channel.
//! - [`model`]: the two-qubit QNN (angle encoding followed by `L` layers of
//!   four rotations and one CNOT) and its exact and shot-sampled outputs.
//! - [`estimator`]: parameter-shift Jacobians, residuals, MSE/BCE losses and
//!   the logit transform.
//! - [`optimizers`]: gradient descent, Adam and the Tikhonov-regularised
//!   pseudo-inverse correction behind a shared [`optimizers::Optimizer`] trait.
//! - [`bench`]: the teacher-student harness, seed ensembles and sweeps.
//!
//! Basis ordering convention: qubit 0 is the most significant bit of a basis
//! index, so `|10⟩` on two qubits is index 2.

pub mod bench;
pub mod error;
pub mod estimator;
pub mod model;
pub mod optimizers;
pub mod rng;
pub mod statesim;

pub use error::{Error, Result};

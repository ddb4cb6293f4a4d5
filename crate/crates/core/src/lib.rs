//! Classical kernels for simulating non-unitary linear dynamics
//! `du/dt = -A(t) u + b(t)` as a randomized linear combination of
//! Hamiltonian simulations.
//!
//! The crate is `no_std` with `alloc`. Everything that touches files, the
//! command line or threads lives in the companion `rlchs` crate.
//!
//! Module map:
//! - [`linalg`], [`pauli`], [`schedule`], [`evolution`], [`ode`]: operators,
//!   dense oracles and propagators.
//! - [`quadrature`], [`lchs`]: the kernel, its truncated quadrature grid and
//!   the Hermitian/anti-Hermitian split with spectral shift.
//! - [`models`]: transverse-field Ising and Hatano-Nelson chains.
//! - [`cqdrift`]: continuous-time qDrift trajectories.
//! - [`lcu`]: Monte-Carlo sampling of the outer linear combination.
//! - [`observable`]: pair-sampled observable estimation and the
//!   random-compiler (URCC) path estimator.
//! - [`symmetry`]: pseudo-Hermiticity, intertwiners and protected sampling.
//! - [`resources`]: closed-form resource estimates.
//! - [`trials`]: seeded trials for the benchmark and trace experiments.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cqdrift;
pub mod error;
pub mod evolution;
pub mod lchs;
pub mod lcu;
pub mod linalg;
pub mod models;
pub mod observable;
pub mod ode;
pub mod pauli;
pub mod quadrature;
pub mod resources;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod symmetry;
pub mod trials;

pub use error::{Error, Result};
pub use linalg::{C64, DenseOperator, StateVector};
pub use pauli::{PauliString, PauliSum, WeightedPauli};

//! Structure-preserving proper orthogonal decomposition (POD) reduced-order
//! models for Hamiltonian PDEs.
//!
//! The crate builds finite-difference Hamiltonian systems (linear wave, KdV),
//! integrates them with the energy-conserving average-vector-field scheme,
//! extracts POD bases from snapshots and assembles Galerkin and
//! structure-preserving reduced models on top of them.

pub mod error;
pub mod hamsys;
pub mod integrate;
pub mod metrics;
pub mod numkernel;
pub mod pod;
pub mod rom;
pub mod xp;

pub use error::{Error, Result};

//! Simulator for measurement-induced entanglement of two qubits sitting in
//! remote cavities that are chained by a lossy, directional transmission line
//! and read out by homodyne detection.
//!
//! The crate is organised bottom-up:
//!
//! - [`slh`] composes the cascade network from SLH triples and lowers it to a
//!   Lindblad generator.
//! - [`cavity`] integrates the qubit-conditioned coherent amplitudes.
//! - [`compensation`] chooses the second-cavity drive that makes the output
//!   field blind to odd parity.
//! - [`sme`] integrates the conditional master equation in the polaron, reduced
//!   lab and full Fock-space pictures.
//! - [`analysis`] turns trajectories into outcome labels, histograms and
//!   concurrence.
//! - [`ensemble`] loads configs, runs seeded trajectory ensembles and writes
//!   results.

pub mod analysis;
pub mod basis;
pub mod cavity;
pub mod compensation;
pub mod drive;
pub mod ensemble;
pub mod error;
pub mod params;
pub mod rng;
pub mod slh;
pub mod sme;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use params::SystemParams;

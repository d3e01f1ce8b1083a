//! Correlation-energy bounds for a Fermi gas on the integer lattice ℤ³.
//!
//! The crate evaluates the bosonic and exchange correlation energies, the
//! Fermi-state energy and the error functional for repulsive lattice
//! potentials, and checks the underlying operator identities on small
//! second-quantized mode sets.

pub mod cli;
pub mod energy;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod numeric;
pub mod onebody;
pub mod potential;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{fermi_ball, lune, FermiBall, LatticeVector, Lune};
pub use potential::PotentialModel;

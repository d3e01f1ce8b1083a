//! Exact second quantization on small mode sets.
//!
//! Modes are lattice momenta from `B_F` and the lunes of a finite,
//! inversion-symmetric list of transfers `k`. Operators act on the sector
//! with `N = |B_F|` fermions and are stored as sparse matrices in the
//! occupation-mask basis, with Jordan–Wigner signs taken in mode order.

pub mod diag;
pub mod expm;
pub mod modes;
pub mod ops;
pub mod sector;
pub mod suites;
pub mod system;

pub use diag::{DiagonalizationTerms, TheoremResidual};
pub use expm::{ExpAction, DENSE_LIMIT};
pub use modes::{ModeKind, ModeSet, DEFAULT_MODE_CAP};
pub use sector::{apply_string, string_operator, FockSector, Ladder, SectorOperator};
pub use suites::{
    nested_commutator_check, verify_algebra, verify_diagonalization, verify_exchange_value, verify_fermionic_estimates,
    verify_nonbosonizable, FockSuiteOptions,
};
pub use system::FockSystem;

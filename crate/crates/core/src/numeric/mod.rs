//! Numerical building blocks: compensated summation, quadrature rules and
//! dense symmetric linear algebra helpers.

pub mod linalg;
pub mod quadrature;
pub mod sum;

pub use sum::{neumaier_sum, Neumaier};

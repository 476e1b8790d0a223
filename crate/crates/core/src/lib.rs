//! Exact computations around formal integrability: symbol prolongation,
//! Spencer δ-cohomology, Cartan characters, completion of linear PDE
//! systems, prolongation-space isotropies and derived flags of Pfaffian
//! systems.
//!
//! Everything is exact: scalars are arbitrary-precision rationals and every
//! rank is computed by fraction-free elimination.

pub mod error;
pub mod exactlin;
pub mod flags;
pub mod jetcalc;
pub mod kuranishi;
pub mod medolaghi;
pub mod polyalg;
pub mod spencer;

pub use error::{Error, Result};

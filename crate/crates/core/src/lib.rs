//! Powered Bohr radii of holomorphic and pluriharmonic power series on
//! polydisks and `l_t`-balls.
//!
//! The crate computes per-family radii (the largest `r` for which the
//! p-powered majorant `Σ_{k>=1} Σ_{|α|=k} ‖x_α‖^p |z^α|^p` stays below one
//! on `rR`), the exact class radius of the unit ball of `H^2(D^n)`,
//! explicit-constant lower certificates, witness upper bounds, and the
//! sweeps and fits used to compare all of these against their predicted
//! growth in the dimension `n`.
//!
//! ```
//! use bohr_lab::radius::exact_h2_radius;
//! let r = exact_h2_radius(1, 1.0).unwrap();
//! assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod family;
pub mod majorant;
pub mod multiindex;
pub mod radius;

pub use error::{Error, Result};

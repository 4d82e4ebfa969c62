//! Numerical study of the Gross–Pitaevskii ground state in a harmonic trap near
//! the Thomas–Fermi boundary, via the Hastings–McLeod solution of Painlevé II.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grids;
pub mod groundstate;
pub mod corrections;
pub mod painleve;
pub mod semiclassics;
pub mod spectrum;

pub use error::{Error, Result};

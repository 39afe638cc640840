//! Localizing events on lattice bosons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod continuum;
pub mod dynamics;
pub mod lattice;
pub mod parallel;
pub mod rates;
pub mod spdm;

pub use error::{Error, Result};
pub use num_complex::Complex64;

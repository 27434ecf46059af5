//! Vanishing-viscosity laboratory for the 1D compressible Navier–Stokes
//! system with density-dependent viscosity and quadratic drag.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augmented;
pub mod eos;
pub mod error;
pub mod euler;
pub mod field;
pub mod layer;
pub mod ns;
pub mod rates;
pub mod relative;

pub use error::{Error, Result};

//! Orchestration around `vll-core`: configuration, single runs, viscosity
//! sweeps, the verification suite and layer scaling tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod scaling;
pub mod sweep;

pub use config::RunConfig;
pub use error::{HarnessError, Result};

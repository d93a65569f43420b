//! Simulation harness for time-inhomogeneous Langevin dynamics.
//!
//! The numerical kernels live in [`fisher_anneal_core`]; this crate adds a
//! multi-threaded ensemble runner, named experiment presets, CSV/JSON/SVG
//! output and the `fa` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod runner;

pub use error::{AppError, ExitCode};
pub use fisher_anneal_core as core;

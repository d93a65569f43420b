//! Numerical kernels for time-inhomogeneous Langevin dynamics.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every piece of the
//! pipeline that is pure computation:
//!
//! - [`model`]: potentials, scalar schedules, the three dynamics families,
//!   their drift and the non-gradient field `γ` of the Fokker-Planck
//!   decomposition.
//! - [`integrate`]: Euler-Maruyama stepping with counter-based noise keyed by
//!   `(seed, particle, step)`.
//! - [`oracle`]: exact Gaussian laws for linear dynamics (moment ODEs).
//! - [`measure`]: the annealed reference measure, histograms and the
//!   KL / L1 / Fisher estimators, plus power-law decay fits.
//! - [`curvature`]: closed-form curvature matrices, the `λ(t)` certificate and
//!   the Gronwall envelope of the Fisher information.
//!
//! Threading, file formats and the command line live in the companion
//! `fisher-anneal` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod curvature;
mod error;
pub mod integrate;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};

//! Potentials, schedules and the dynamics built from them.

mod dynamics;
mod potential;
mod schedule;

pub use dynamics::{
    divergence_residual, uniform_grid, DynamicsSpec, JEval, JField, JScaling, QuadraticJ, ReferenceSpec,
    DIVERGENCE_FD_STEP,
};
pub use potential::{PotentialSpec, QuadraticForm};
pub use schedule::{Schedule, DEFAULT_T0};

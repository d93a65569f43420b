use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Start time used throughout the annealing experiments (`t0 = e`).
pub const DEFAULT_T0: f64 = core::f64::consts::E;

/// A positive scalar function of time with an analytic derivative.
///
/// Used for the temperature `β(t)` of the overdamped and non-reversible
/// families and for the friction `r(t)` of the underdamped family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `C / log t`, defined for `t >= t0 > 1`.
    InverseLog {
        c: f64,
        t0: f64,
    },
    /// `base + C / log t`, defined for `t >= t0 > 1`.
    Shifted {
        base: f64,
        c: f64,
        t0: f64,
    },
    /// `1 / (offset + t)`, defined for `t >= 0`.
    Hyperbolic {
        offset: f64,
    },
    Constant {
        value: f64,
    },
}

impl Schedule {
    pub fn inverse_log(c: f64) -> Self {
        Schedule::InverseLog { c, t0: DEFAULT_T0 }
    }

    pub fn shifted(base: f64, c: f64) -> Self {
        Schedule::Shifted { base, c, t0: DEFAULT_T0 }
    }

    pub fn hyperbolic(offset: f64) -> Self {
        Schedule::Hyperbolic { offset }
    }

    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Schedule::InverseLog { c, .. } => c / libm::log(t),
            Schedule::Shifted { base, c, .. } => base + c / libm::log(t),
            Schedule::Hyperbolic { offset } => 1.0 / (offset + t),
            Schedule::Constant { value } => value,
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            Schedule::InverseLog { c, .. } | Schedule::Shifted { c, .. } => {
                let l = libm::log(t);
                -c / (t * l * l)
            }
            Schedule::Hyperbolic { offset } => {
                let s = offset + t;
                -1.0 / (s * s)
            }
            Schedule::Constant { .. } => 0.0,
        }
    }

    /// Earliest time at which the schedule is defined.
    pub fn domain_start(&self) -> f64 {
        match *self {
            Schedule::InverseLog { t0, .. } | Schedule::Shifted { t0, .. } => t0,
            Schedule::Hyperbolic { .. } => 0.0,
            Schedule::Constant { .. } => f64::NEG_INFINITY,
        }
    }

    /// The same schedule frozen at its value at `t`.
    pub fn frozen_at(&self, t: f64) -> Self {
        Schedule::Constant { value: self.eval(t) }
    }

    /// Rejects parameter sets whose value can become non-positive on the
    /// schedule domain.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(alloc::format!("schedule {self:?}: {msg}")));
        match *self {
            Schedule::InverseLog { c, t0 } => {
                if !(c > 0.0) {
                    return bad("C must be positive");
                }
                if !(t0 > 1.0) {
                    return bad("t0 must exceed 1 so that log t > 0");
                }
            }
            Schedule::Shifted { base, c, t0 } => {
                if !(base >= 0.0 && c >= 0.0 && base + c > 0.0) {
                    return bad("base and C must be non-negative and not both zero");
                }
                if !(t0 > 1.0) {
                    return bad("t0 must exceed 1 so that log t > 0");
                }
            }
            Schedule::Hyperbolic { offset } => {
                if !(offset > 0.0) {
                    return bad("offset must be positive");
                }
            }
            Schedule::Constant { value } => {
                if !(value > 0.0) {
                    return bad("value must be positive");
                }
            }
        }
        Ok(())
    }

    /// Evaluates the schedule, failing outside its domain or when the value
    /// is not strictly positive.
    pub fn checked_eval(&self, t: f64) -> Result<f64> {
        let start = self.domain_start();
        if t < start {
            return Err(Error::OutsideScheduleDomain { t, start });
        }
        let value = self.eval(t);
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveSchedule { t, value });
        }
        Ok(value)
    }
}

//! Experiment manifests: a JSON file whose keys mirror the command-line
//! flags. Flags override the file, and the file overrides the preset.

use std::path::{Path, PathBuf};

use fisher_anneal_core::integrate::{InitialLaw, StepPlan};
use fisher_anneal_core::measure::DEFAULT_PADDING;
use fisher_anneal_core::model::{DynamicsSpec, PotentialSpec, Schedule, DEFAULT_T0};
use serde::{Deserialize, Serialize};

use crate::experiments::{self, HistogramSpec, Marginal, Observers, Scenario};
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Overdamped,
    Underdamped,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Named scenario to start from.
    pub preset: Option<String>,
    /// Output file stem; defaults to the preset name.
    pub name: Option<String>,
    /// Potential preset for an inline scenario.
    pub potential: Option<String>,
    pub family: Option<Family>,
    /// Full replacement of `β(t)` (or of `r(t)` for the underdamped family).
    pub schedule: Option<Schedule>,
    /// Constant of the default schedule: `C` in `C / log t`, the friction
    /// base `β` in `β + 1 / log t`, or the value of a constant schedule.
    pub c: Option<f64>,
    pub particles: Option<usize>,
    pub steps: Option<u64>,
    pub h: Option<f64>,
    pub t0: Option<f64>,
    pub bins: Option<usize>,
    pub record_every: Option<u64>,
    pub marginal: Option<Marginal>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub plot: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, AppError> {
        Ok(serde_json::from_str(text)?)
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: Config) -> Self {
        let base = &mut self;
        overlay!(base, top; preset, name, potential, family, schedule, c, particles, steps, h, t0, bins,
            record_every, marginal, seed, out, threads, plot);
        self
    }

    fn inline_scenario(&self) -> Result<Scenario, AppError> {
        let pname = self
            .potential
            .as_deref()
            .ok_or_else(|| AppError::Config("either `preset` or `potential` must be given".into()))?;
        let potential = PotentialSpec::preset(pname)
            .ok_or_else(|| AppError::Config(format!("unknown potential preset `{pname}`")))?;
        let family = self.family.unwrap_or(Family::Overdamped);
        let dynamics = match family {
            Family::Overdamped => DynamicsSpec::Overdamped { potential, beta: Schedule::inverse_log(4.0) },
            Family::Underdamped => {
                if potential.dim() != 1 {
                    return Err(AppError::Config("the underdamped family needs a one-dimensional potential".into()));
                }
                DynamicsSpec::Underdamped { potential, friction: Schedule::shifted(1.0, 1.0) }
            }
        };
        let h = if potential.dim() == 2 { 0.001 } else { 0.002 };
        Ok(Scenario {
            name: pname.to_string(),
            description: format!("inline {family:?} scenario on {pname}"),
            dynamics,
            plan: StepPlan { h, n_steps: 2000, t0: DEFAULT_T0, record_every: 20 },
            particles: 100_000,
            init: InitialLaw::StandardNormal,
            histogram: HistogramSpec { bins: 50, marginal: Marginal::Full, padding: DEFAULT_PADDING },
            observers: Observers::DIVERGENCES,
            expected: None,
        })
    }

    /// Builds the scenario described by this configuration.
    pub fn scenario(&self) -> Result<Scenario, AppError> {
        let mut s = match &self.preset {
            Some(name) => experiments::preset(name).ok_or_else(|| {
                AppError::Config(format!("unknown preset `{name}` (run `fa list-presets` for the list)"))
            })?,
            None => self.inline_scenario()?,
        };
        if self.preset.is_some() && (self.potential.is_some() || self.family.is_some()) {
            return Err(AppError::Config("`potential` and `family` only apply to inline scenarios".into()));
        }
        if let Some(name) = &self.name {
            s.name = name.clone();
        }
        if let Some(v) = self.c {
            positive("c", v)?;
            let sched = schedule_mut(&mut s.dynamics);
            *sched = match *sched {
                Schedule::InverseLog { t0, .. } => Schedule::InverseLog { c: v, t0 },
                Schedule::Shifted { c, t0, .. } => Schedule::Shifted { base: v, c, t0 },
                Schedule::Constant { .. } => Schedule::Constant { value: v },
                Schedule::Hyperbolic { .. } => Schedule::Hyperbolic { offset: v },
            };
        }
        if let Some(sched) = self.schedule {
            sched.validate()?;
            *schedule_mut(&mut s.dynamics) = sched;
        }
        if let Some(m) = self.particles {
            if m == 0 {
                return Err(AppError::Config("`particles` must be positive".into()));
            }
            s.particles = m;
        }
        if let Some(n) = self.steps {
            s.plan.n_steps = n;
        }
        if let Some(h) = self.h {
            positive("h", h)?;
            s.plan.h = h;
        }
        if let Some(t0) = self.t0 {
            s.plan.t0 = t0;
        }
        if let Some(k) = self.bins {
            if k < 2 {
                return Err(AppError::Config("`bins` must be at least 2".into()));
            }
            s.histogram.bins = k;
        }
        if let Some(r) = self.record_every {
            if r == 0 {
                return Err(AppError::Config("`record_every` must be positive".into()));
            }
            s.plan.record_every = r;
        }
        if let Some(m) = self.marginal {
            s.histogram.marginal = m;
        }
        s.validate()?;
        Ok(s)
    }
}

fn positive(key: &str, v: f64) -> Result<(), AppError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AppError::Config(format!("`{key}` must be positive, got {v}")))
    }
}

fn schedule_mut(d: &mut DynamicsSpec) -> &mut Schedule {
    match d {
        DynamicsSpec::Overdamped { beta, .. } => beta,
        DynamicsSpec::NonReversible { beta, .. } => beta,
        DynamicsSpec::Underdamped { friction, .. } => friction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = Config::from_json(r#"{"preset": "fig1a-desk", "stepsize": 0.1}"#).unwrap_err();
        assert!(err.to_string().contains("stepsize"), "{err}");
    }

    #[test]
    fn flags_win_over_file() {
        let file = Config::from_json(r#"{"preset": "fig1a-desk", "steps": 10, "h": 0.01}"#).unwrap();
        let flags = Config { steps: Some(5), ..Config::default() };
        let s = file.overlay(flags).scenario().unwrap();
        assert_eq!((s.plan.n_steps, s.plan.h), (5, 0.01));
    }

    #[test]
    fn constant_override_follows_schedule_kind() {
        let s = Config { preset: Some("fig1a-desk".into()), c: Some(8.0), ..Config::default() }.scenario().unwrap();
        assert_eq!(s.dynamics, experiments::preset("fig1a-desk-c8").unwrap().dynamics);
        let u = Config { preset: Some("fig6a-desk".into()), c: Some(2.0), ..Config::default() }.scenario().unwrap();
        match u.dynamics {
            DynamicsSpec::Underdamped { friction: Schedule::Shifted { base, c, .. }, .. } => {
                assert_eq!((base, c), (2.0, 1.0))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inline_and_invalid_values() {
        let s = Config::from_json(r#"{"potential": "fig2b", "family": "underdamped", "particles": 10}"#)
            .unwrap()
            .scenario()
            .unwrap();
        assert_eq!(s.dynamics.state_dim(), 2);
        for bad in [
            r#"{"preset": "fig1a-desk", "h": -1}"#,
            r#"{"preset": "fig1a-desk", "particles": 0}"#,
            r#"{"preset": "fig1a-desk", "t0": 0.5}"#,
            r#"{"preset": "nope"}"#,
            r#"{"potential": "fig3a", "family": "underdamped"}"#,
            r#"{}"#,
        ] {
            assert!(Config::from_json(bad).unwrap().scenario().is_err(), "{bad}");
        }
    }
}

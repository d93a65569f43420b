//! Euler-Maruyama integration of particle ensembles.
//!
//! Noise is counter based. Every particle owns a ChaCha8 stream selected by
//! its index, and step `n` reads a fixed window of four 32-bit words at
//! position `4 (n + 1)`, so that the draw for `(seed, particle, step)` never
//! depends on how particles are split across workers or on the order in
//! which they are visited. Window `0` holds the initial-law draw.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat2, Vec2, ZERO2};
use crate::model::DynamicsSpec;
use crate::{Error, Result};

/// 32-bit words consumed per step (two `u64`, i.e. one Box-Muller pair).
pub const WORDS_PER_STEP: u128 = 4;

/// Step size, length and recording cadence of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub h: f64,
    pub n_steps: u64,
    pub t0: f64,
    pub record_every: u64,
}

impl StepPlan {
    pub fn new(h: f64, n_steps: u64, t0: f64, record_every: u64) -> Result<Self> {
        let plan = StepPlan { h, n_steps, t0, record_every };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("step size h = {} must be positive", self.h)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("t0 must be finite".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks the plan against the schedule domain of `spec`.
    pub fn validate_for(&self, spec: &DynamicsSpec) -> Result<()> {
        self.validate()?;
        let start = spec.noise_schedule().domain_start();
        if self.t0 < start {
            return Err(Error::OutsideScheduleDomain { t: self.t0, start });
        }
        Ok(())
    }

    pub fn time_at(&self, step: u64) -> f64 {
        self.t0 + step as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time_at(self.n_steps)
    }

    /// Step indices at which diagnostics are taken: every multiple of
    /// `record_every` plus the final step.
    pub fn record_steps(&self) -> Vec<u64> {
        let mut v: Vec<u64> = (0..=self.n_steps).step_by(self.record_every as usize).collect();
        if v.last() != Some(&self.n_steps) {
            v.push(self.n_steps);
        }
        v
    }
}

/// Noise switch. `Suppressed` turns the scheme into explicit Euler on the
/// drift ODE, which the tests use to isolate the deterministic part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Gaussian,
    Suppressed,
}

/// Law of the initial particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    StandardNormal,
    Gaussian { mean: Vec2, cov: Mat2 },
    Point { x: Vec2 },
}

impl InitialLaw {
    /// Mean and covariance in `dim` dimensions.
    pub fn moments(&self, dim: usize) -> (Vec2, Mat2) {
        match *self {
            InitialLaw::StandardNormal => (ZERO2, linalg::identity(dim)),
            InitialLaw::Gaussian { mean, cov } => (mean, cov),
            InitialLaw::Point { x } => (x, linalg::ZERO_MAT),
        }
    }

    fn factor(&self, dim: usize) -> Result<(Vec2, Mat2)> {
        let (m, c) = self.moments(dim);
        if let InitialLaw::Point { .. } = self {
            return Ok((m, c));
        }
        let l = linalg::cholesky(&c, dim)
            .ok_or_else(|| Error::InvalidParameter("initial covariance must be positive definite".into()))?;
        Ok((m, l))
    }
}

/// The ChaCha8 stream of one particle, positioned at the noise window of
/// `step` (`None` selects the initial-law window).
pub fn particle_rng(seed: u64, particle: usize, step: Option<u64>) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle as u64);
    let window = step.map_or(0, |s| s as u128 + 1);
    rng.set_word_pos(window * WORDS_PER_STEP);
    rng
}

/// Two independent standard normals from exactly two `u64` draws.
#[inline]
pub fn normal_pair(rng: &mut ChaCha8Rng) -> [f64; 2] {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let (s, c) = libm::sincos(core::f64::consts::TAU * u2);
    [r * c, r * s]
}

/// Particle states with their position in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub dim: usize,
    pub states: Vec<Vec2>,
    pub step_index: u64,
    pub t0: f64,
    pub h: f64,
    pub seed: u64,
    pub noise: Noise,
}

impl Ensemble {
    /// Draws `m` particles from `law` using the initial window of each
    /// particle's stream.
    pub fn sample(dim: usize, m: usize, law: &InitialLaw, plan: &StepPlan, seed: u64) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one particle".into()));
        }
        let (mean, l) = law.factor(dim)?;
        let states = (0..m)
            .map(|p| {
                let z = normal_pair(&mut particle_rng(seed, p, None));
                let lz = linalg::mat_vec(&l, &z);
                let mut x = ZERO2;
                for i in 0..dim {
                    x[i] = mean[i] + lz[i];
                }
                x
            })
            .collect();
        Ok(Ensemble { dim, states, step_index: 0, t0: plan.t0, h: plan.h, seed, noise: Noise::Gaussian })
    }

    pub fn from_states(dim: usize, states: Vec<Vec2>, plan: &StepPlan, seed: u64) -> Self {
        Ensemble { dim, states, step_index: 0, t0: plan.t0, h: plan.h, seed, noise: Noise::Gaussian }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.step_index as f64 * self.h
    }

    /// Coordinates `coords` of every particle, packed into the leading slots.
    pub fn project(&self, coords: &[usize]) -> Vec<Vec2> {
        self.states
            .iter()
            .map(|s| {
                let mut p = ZERO2;
                for (k, &c) in coords.iter().enumerate() {
                    p[k] = s[c];
                }
                p
            })
            .collect()
    }

    /// Euclidean distance of each particle's first `dim_x` coordinates to `target`.
    pub fn distances_to(&self, target: &Vec2, dim_x: usize) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| {
                let d: Vec2 = [s[0] - target[0], if dim_x == 2 { s[1] - target[1] } else { 0.0 }];
                linalg::norm(&d[..dim_x])
            })
            .collect()
    }

    /// First and second empirical moments.
    pub fn moments(&self) -> (Vec2, Mat2) {
        let n = self.len() as f64;
        let mut m = ZERO2;
        for s in &self.states {
            m[0] += s[0] / n;
            m[1] += s[1] / n;
        }
        let mut c = linalg::ZERO_MAT;
        for s in &self.states {
            let d = [s[0] - m[0], s[1] - m[1]];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] += d[i] * d[j] / (n - 1.0).max(1.0);
                }
            }
        }
        (m, c)
    }

    /// Advances every particle by `n` steps sequentially.
    pub fn advance(&mut self, spec: &DynamicsSpec, n: u64) -> Result<()> {
        let window = StepWindow::new(spec, self.t0, self.h, self.step_index, n)?;
        for (p, x) in self.states.iter_mut().enumerate() {
            advance_particle(spec, &window, self.seed, p, x, self.noise)?;
        }
        self.step_index += n;
        Ok(())
    }
}

/// Times and noise amplitudes `√(2 D(t_n) h)` for a run of consecutive
/// steps, evaluated once and shared by every particle.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWindow {
    pub first_step: u64,
    pub h: f64,
    pub times: Vec<f64>,
    pub noise_sd: Vec<f64>,
}

impl StepWindow {
    pub fn new(spec: &DynamicsSpec, t0: f64, h: f64, first_step: u64, n: u64) -> Result<Self> {
        let schedule = spec.noise_schedule();
        let mut times = Vec::with_capacity(n as usize);
        let mut noise_sd = Vec::with_capacity(n as usize);
        for k in 0..n {
            let t = t0 + (first_step + k) as f64 * h;
            let d = schedule.checked_eval(t)?;
            times.push(t);
            noise_sd.push(libm::sqrt(2.0 * d * h));
        }
        Ok(StepWindow { first_step, h, times, noise_sd })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One Euler-Maruyama update `x + h b(t, x) + sd ξ` with `ξ` applied to the
/// noisy coordinates of `spec`.
#[inline]
pub fn em_update(spec: &DynamicsSpec, t: f64, h: f64, sd: f64, x: &Vec2, xi: &[f64; 2]) -> Vec2 {
    let b = spec.drift_unchecked(t, &x[..spec.state_dim()]);
    let mut out = *x;
    for i in 0..spec.state_dim() {
        out[i] += h * b[i];
    }
    for (k, i) in spec.noisy_coordinates().enumerate() {
        out[i] += sd * xi[k];
    }
    out
}

/// Runs particle `particle` through every step of `window`, drawing its
/// noise sequentially from its own stream.
pub fn advance_particle(
    spec: &DynamicsSpec,
    window: &StepWindow,
    seed: u64,
    particle: usize,
    x: &mut Vec2,
    noise: Noise,
) -> Result<()> {
    if window.is_empty() {
        return Ok(());
    }
    let mut rng = particle_rng(seed, particle, Some(window.first_step));
    let dim = spec.state_dim();
    for (k, (&t, &sd)) in window.times.iter().zip(&window.noise_sd).enumerate() {
        let xi = match noise {
            Noise::Gaussian => normal_pair(&mut rng),
            Noise::Suppressed => [0.0; 2],
        };
        let next = em_update(spec, t, window.h, sd, x, &xi);
        if !next[..dim].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: window.first_step + k as u64, particle });
        }
        *x = next;
    }
    Ok(())
}

/// A single Euler-Maruyama step of the whole ensemble with step size `h`.
pub fn em_step(ensemble: &Ensemble, spec: &DynamicsSpec, h: f64) -> Result<Ensemble> {
    if spec.state_dim() != ensemble.dim {
        return Err(Error::DimensionMismatch { expected: spec.state_dim(), got: ensemble.dim });
    }
    let mut next = ensemble.clone();
    // Keep the time axis consistent when a caller changes the step size.
    if h != ensemble.h {
        next.t0 = ensemble.time() - ensemble.step_index as f64 * h;
        next.h = h;
    }
    next.advance(spec, 1)?;
    Ok(next)
}

/// Sequential reference implementation of a full run: samples the initial
/// ensemble, steps it through `plan` and hands the ensemble to `observe` at
/// each recorded step.
pub fn run_trajectory<T>(
    spec: &DynamicsSpec,
    plan: &StepPlan,
    m: usize,
    init: &InitialLaw,
    seed: u64,
    mut observe: impl FnMut(&Ensemble) -> Result<T>,
) -> Result<Vec<T>> {
    spec.validate()?;
    plan.validate_for(spec)?;
    let mut ens = Ensemble::sample(spec.state_dim(), m, init, plan, seed)?;
    let mut out = Vec::new();
    for target in plan.record_steps() {
        let n = target - ens.step_index;
        ens.advance(spec, n)?;
        out.push(observe(&ens)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JField, JScaling, PotentialSpec, QuadraticJ, Schedule};

    fn fig1a(beta: Schedule) -> DynamicsSpec {
        DynamicsSpec::Overdamped { potential: PotentialSpec::preset("fig1a").unwrap(), beta }
    }

    fn plan(h: f64, n: u64) -> StepPlan {
        StepPlan::new(h, n, core::f64::consts::E, 1).unwrap()
    }

    #[test]
    fn noiseless_step_is_explicit_euler() {
        let spec = fig1a(Schedule::inverse_log(1.0));
        let p = plan(0.002, 1);
        let e = Ensemble::from_states(1, alloc::vec![[2.0, 0.0]], &p, 1).with_noise(Noise::Suppressed);
        let next = em_step(&e, &spec, 0.002).unwrap();
        assert!((next.states[0][0] - 1.9995).abs() < 1e-15);
        assert_eq!(next.step_index, 1);
        assert!((next.time() - (core::f64::consts::E + 0.002)).abs() < 1e-15);
    }

    #[test]
    fn stationary_points_are_fixed_without_noise() {
        let specs = [
            fig1a(Schedule::inverse_log(2.0)),
            DynamicsSpec::NonReversible {
                potential: PotentialSpec::preset("ex52").unwrap(),
                beta: Schedule::hyperbolic(1.0),
                j: JField::Quadratic(QuadraticJ::off_diagonal(-0.95, ZERO2, JScaling::InverseBeta)),
            },
            DynamicsSpec::Underdamped {
                potential: PotentialSpec::preset("fig1a").unwrap(),
                friction: Schedule::shifted(1.0, 1.0),
            },
        ];
        let starts = [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        for (spec, x) in specs.iter().zip(starts) {
            let p = plan(0.01, 10);
            let mut e = Ensemble::from_states(spec.state_dim(), alloc::vec![x], &p, 3).with_noise(Noise::Suppressed);
            e.advance(spec, 10).unwrap();
            assert_eq!(e.states[0], x);
        }
    }

    #[test]
    fn noise_scale_at_unit_temperature() {
        // C = 1 at t = e gives β = 1, so the increment is √(2h) ξ.
        let spec = DynamicsSpec::Overdamped {
            potential: PotentialSpec::Quadratic(crate::model::QuadraticForm::one_dim(0.0, 0.0)),
            beta: Schedule::inverse_log(1.0),
        };
        let h = 0.002;
        let p = plan(h, 1);
        let n = 40_000;
        let e = Ensemble::from_states(1, alloc::vec![[0.0, 0.0]; n], &p, 11);
        let next = em_step(&e, &spec, h).unwrap();
        let var: f64 = next.states.iter().map(|s| s[0] * s[0]).sum::<f64>() / n as f64;
        let expected = 2.0 * h;
        // standard error of a variance estimate: √(2/n) σ²
        assert!((var - expected).abs() < 4.0 * libm::sqrt(2.0 / n as f64) * expected, "{var}");
        let w = StepWindow::new(&spec, core::f64::consts::E, h, 0, 1).unwrap();
        assert!((w.noise_sd[0] - libm::sqrt(2.0 * h)).abs() < 1e-15);
    }

    #[test]
    fn underdamped_position_gets_no_direct_noise() {
        let spec = DynamicsSpec::Underdamped {
            potential: PotentialSpec::preset("fig1b").unwrap(),
            friction: Schedule::shifted(1.0, 1.0),
        };
        let h = 0.01;
        let p = plan(h, 1);
        let x0 = [0.3, -0.7];
        let e = Ensemble::from_states(2, alloc::vec![x0; 64], &p, 5);
        let next = em_step(&e, &spec, h).unwrap();
        for s in &next.states {
            assert_eq!(s[0], x0[0] + h * x0[1]);
        }
        assert!(next.states.iter().any(|s| s[1] != next.states[0][1]));
    }

    #[test]
    fn draws_depend_only_on_particle_and_step() {
        let spec = fig1a(Schedule::inverse_log(4.0));
        let p = plan(0.002, 50);
        let e0 = Ensemble::sample(1, 16, &InitialLaw::StandardNormal, &p, 9).unwrap();
        let mut whole = e0.clone();
        whole.advance(&spec, 50).unwrap();
        let mut split = e0.clone();
        split.advance(&spec, 17).unwrap();
        split.advance(&spec, 33).unwrap();
        assert_eq!(whole.states, split.states);
        let mut stepped = e0;
        for _ in 0..50 {
            stepped = em_step(&stepped, &spec, 0.002).unwrap();
        }
        assert_eq!(whole.states, stepped.states);
    }

    #[test]
    fn nan_is_reported_with_step_and_particle() {
        let spec = DynamicsSpec::Overdamped {
            potential: PotentialSpec::preset("fig2a").unwrap(),
            beta: Schedule::constant(1.0),
        };
        let p = plan(0.01, 100);
        let mut e = Ensemble::from_states(1, alloc::vec![[0.0, 0.0], [40.0, 0.0]], &p, 1).with_noise(Noise::Suppressed);
        match e.advance(&spec, 100) {
            Err(Error::NonFinite { particle, step }) => {
                assert_eq!(particle, 1);
                assert!(step < 100);
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn schedule_domain_is_enforced() {
        let spec = fig1a(Schedule::inverse_log(1.0));
        let p = StepPlan::new(0.1, 10, 0.5, 1).unwrap();
        assert!(matches!(p.validate_for(&spec), Err(Error::OutsideScheduleDomain { .. })));
        assert!(StepPlan::new(0.0, 10, 3.0, 1).is_err());
    }

    #[test]
    fn zero_steps_records_initial_state_only() {
        let spec = fig1a(Schedule::inverse_log(4.0));
        let p = plan(0.002, 0);
        let rows = run_trajectory(&spec, &p, 8, &InitialLaw::StandardNormal, 1, |e| Ok(e.step_index)).unwrap();
        assert_eq!(rows, alloc::vec![0]);
        let p = StepPlan::new(0.002, 25, core::f64::consts::E, 10).unwrap();
        assert_eq!(p.record_steps(), alloc::vec![0, 10, 20, 25]);
    }

    #[test]
    fn box_muller_is_standard_normal() {
        let mut rng = particle_rng(42, 0, Some(0));
        let n = 100_000;
        let (mut s1, mut s2, mut s12) = (0.0, 0.0, 0.0);
        for _ in 0..n / 2 {
            let [a, b] = normal_pair(&mut rng);
            s1 += a + b;
            s2 += a * a + b * b;
            s12 += a * b;
        }
        let nf = n as f64;
        assert!((s1 / nf).abs() < 4.0 / libm::sqrt(nf));
        assert!((s2 / nf - 1.0).abs() < 4.0 * libm::sqrt(2.0 / nf));
        assert!((s12 / (nf / 2.0)).abs() < 4.0 / libm::sqrt(nf / 2.0));
    }
}

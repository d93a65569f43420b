//! Exact Gaussian laws for linear dynamics.
//!
//! With a quadratic potential every family here is a linear SDE
//! `dX = (A(t) X + c(t)) dt + noise`, so a Gaussian initial law stays
//! Gaussian and its moments solve
//!
//! ```text
//! m′ = A m + c,   Σ′ = A Σ + Σ Aᵀ + 2 D(t),
//! ```
//!
//! where `D` is the diffusion matrix. The ODE is integrated by classical
//! RK4 with step `h / 10`.

use alloc::vec::Vec;

use libm::log;
use serde::{Deserialize, Serialize};

use crate::integrate::StepPlan;
use crate::linalg::{self, Mat2, Vec2, ZERO2, ZERO_MAT};
use crate::model::{DynamicsSpec, JField, PotentialSpec, ReferenceSpec};
use crate::{Error, Result};

/// RK4 substeps per integrator step.
pub const SUBSTEPS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub dim: usize,
    pub mean: Vec2,
    pub cov: Mat2,
}

impl GaussianState {
    pub fn new(dim: usize, mean: Vec2, cov: Mat2) -> Self {
        GaussianState { dim, mean, cov: linalg::symmetrize(&cov) }
    }

    /// Restriction to the coordinates in `coords`.
    pub fn marginal(&self, coords: &[usize]) -> GaussianState {
        let mut m = ZERO2;
        let mut c = ZERO_MAT;
        for (a, &i) in coords.iter().enumerate() {
            m[a] = self.mean[i];
            for (b, &j) in coords.iter().enumerate() {
                c[a][b] = self.cov[i][j];
            }
        }
        GaussianState { dim: coords.len(), mean: m, cov: c }
    }
}

/// `KL(N(m₁, Σ₁) ‖ N(m₂, Σ₂))`.
pub fn gaussian_kl(p: &GaussianState, q: &GaussianState) -> Result<f64> {
    let d = p.dim;
    let qinv = linalg::inverse(&q.cov, d).ok_or_else(|| Error::InvalidParameter("singular covariance".into()))?;
    let dp = linalg::det(&p.cov, d);
    let dq = linalg::det(&q.cov, d);
    if !(dp > 0.0 && dq > 0.0) {
        return Err(Error::InvalidParameter("covariance must be positive definite".into()));
    }
    let diff = [q.mean[0] - p.mean[0], q.mean[1] - p.mean[1]];
    let tr = linalg::trace(&linalg::mat_mul(&qinv, &p.cov), d);
    let maha = linalg::dot(&diff, &linalg::mat_vec(&qinv, &diff));
    Ok(0.5 * (tr + maha - d as f64 + log(dq / dp)))
}

/// Relative Fisher information `E_p ⟨∇log(p/π), W ∇log(p/π)⟩` of two
/// Gaussians: `tr(W A Σ Aᵀ) + bᵀ W b` with `A = Σ_π⁻¹ − Σ⁻¹` and
/// `b = Σ_π⁻¹ (m − μ)`.
pub fn gaussian_fisher(p: &GaussianState, pi: &GaussianState, weight: &Mat2) -> Result<f64> {
    let d = p.dim;
    let sinv = linalg::inverse(&p.cov, d).ok_or_else(|| Error::InvalidParameter("singular covariance".into()))?;
    let pinv = linalg::inverse(&pi.cov, d).ok_or_else(|| Error::InvalidParameter("singular covariance".into()))?;
    let a = linalg::sub(&pinv, &sinv);
    let b = linalg::mat_vec(&pinv, &[p.mean[0] - pi.mean[0], p.mean[1] - pi.mean[1]]);
    let asat = linalg::mat_mul(&linalg::mat_mul(&a, &p.cov), &linalg::transpose(&a));
    Ok(linalg::trace(&linalg::mat_mul(weight, &asat), d) + linalg::dot(&b, &linalg::mat_vec(weight, &b)))
}

/// The reference measure at `t` as a Gaussian, for quadratic potentials.
pub fn reference_gaussian(spec: &ReferenceSpec, t: f64) -> Result<GaussianState> {
    let q = spec.potential().as_quadratic().ok_or(Error::NotQuadratic)?;
    let hinv = linalg::inverse(&q.hessian, q.dim).ok_or(Error::NotQuadratic)?;
    if linalg::min_eigenvalue(&q.hessian, q.dim) <= 0.0 {
        return Err(Error::InvalidParameter("reference needs a positive definite hessian".into()));
    }
    Ok(match spec {
        ReferenceSpec::Annealed { beta, .. } => {
            let b = beta.checked_eval(t)?;
            GaussianState::new(q.dim, q.center, linalg::scale(&hinv, b))
        }
        ReferenceSpec::HamiltonianPositionMarginal { .. } => GaussianState::new(q.dim, q.center, hinv),
        ReferenceSpec::Hamiltonian { .. } => GaussianState::new(2, [q.center[0], 0.0], [[hinv[0][0], 0.0], [0.0, 1.0]]),
    })
}

/// Linear coefficients `(A(t), c(t), D(t))` of the dynamics.
fn linear_coefficients(spec: &DynamicsSpec, t: f64) -> Result<(Mat2, Vec2, Mat2)> {
    let quad = |v: &PotentialSpec| v.as_quadratic().copied().ok_or(Error::NotQuadratic);
    match spec {
        DynamicsSpec::Overdamped { potential, beta } => {
            let q = quad(potential)?;
            let a = linalg::scale(&q.hessian, -1.0);
            let c = linalg::mat_vec(&q.hessian, &q.center);
            Ok((a, c, linalg::scale(&linalg::identity(q.dim), beta.eval(t))))
        }
        DynamicsSpec::NonReversible { potential, beta, j } => {
            let q = quad(potential)?;
            let JField::Constant { c: cj } = j else {
                return Err(Error::UnsupportedOracle("a spatially varying J field makes the drift nonlinear"));
            };
            // drift = −(I + c K) H (x − μ) with K = [[0, 1], [−1, 0]]
            let cv = cj.eval(t);
            let m = [[1.0, cv], [-cv, 1.0]];
            let a = linalg::scale(&linalg::mat_mul(&m, &q.hessian), -1.0);
            let c = linalg::scale(&a, -1.0);
            Ok((a, linalg::mat_vec(&c, &q.center), linalg::scale(&linalg::identity(2), beta.eval(t))))
        }
        DynamicsSpec::Underdamped { potential, friction } => {
            let q = quad(potential)?;
            let k = q.hessian[0][0];
            let r = friction.eval(t);
            Ok(([[0.0, 1.0], [-k, -r]], [0.0, k * q.center[0]], [[0.0, 0.0], [0.0, r]]))
        }
    }
}

fn rhs(spec: &DynamicsSpec, t: f64, s: &GaussianState) -> Result<(Vec2, Mat2)> {
    let (a, c, d) = linear_coefficients(spec, t)?;
    let am = linalg::mat_vec(&a, &s.mean);
    let dm = [am[0] + c[0], am[1] + c[1]];
    let asig = linalg::mat_mul(&a, &s.cov);
    let dsig = linalg::add(&linalg::add(&asig, &linalg::transpose(&asig)), &linalg::scale(&d, 2.0));
    Ok((dm, dsig))
}

fn axpy(s: &GaussianState, k: &(Vec2, Mat2), f: f64) -> GaussianState {
    GaussianState {
        dim: s.dim,
        mean: [s.mean[0] + f * k.0[0], s.mean[1] + f * k.0[1]],
        cov: linalg::add(&s.cov, &linalg::scale(&k.1, f)),
    }
}

/// One RK4 step of size `dt` from time `t`.
pub fn rk4_step(spec: &DynamicsSpec, t: f64, s: &GaussianState, dt: f64) -> Result<GaussianState> {
    let k1 = rhs(spec, t, s)?;
    let k2 = rhs(spec, t + 0.5 * dt, &axpy(s, &k1, 0.5 * dt))?;
    let k3 = rhs(spec, t + 0.5 * dt, &axpy(s, &k2, 0.5 * dt))?;
    let k4 = rhs(spec, t + dt, &axpy(s, &k3, dt))?;
    let comb = (
        [k1.0[0] + 2.0 * k2.0[0] + 2.0 * k3.0[0] + k4.0[0], k1.0[1] + 2.0 * k2.0[1] + 2.0 * k3.0[1] + k4.0[1]],
        linalg::add(&linalg::add(&k1.1, &linalg::scale(&k2.1, 2.0)), &linalg::add(&linalg::scale(&k3.1, 2.0), &k4.1)),
    );
    let mut out = axpy(s, &comb, dt / 6.0);
    out.cov = linalg::symmetrize(&out.cov);
    Ok(out)
}

/// Integrates the moment ODE from `init` at `plan.t0` with `substeps` RK4
/// steps per integrator step, returning `(t, state)` at every recorded step
/// of `plan`.
pub fn solve_with_substeps(
    spec: &DynamicsSpec,
    plan: &StepPlan,
    init: &GaussianState,
    substeps: u64,
) -> Result<Vec<(f64, GaussianState)>> {
    plan.validate_for(spec)?;
    if init.dim != spec.state_dim() {
        return Err(Error::DimensionMismatch { expected: spec.state_dim(), got: init.dim });
    }
    // Surfaces non-quadratic potentials before any work is done.
    linear_coefficients(spec, plan.t0)?;
    let dt = plan.h / substeps as f64;
    let mut state = *init;
    let mut step = 0u64;
    let mut out = Vec::new();
    for target in plan.record_steps() {
        while step < target {
            let base = plan.time_at(step);
            for k in 0..substeps {
                state = rk4_step(spec, base + k as f64 * dt, &state, dt)?;
            }
            step += 1;
        }
        out.push((plan.time_at(step), state));
    }
    Ok(out)
}

/// Exact Gaussian law of the continuous dynamics at the recorded times of
/// `plan`, for quadratic potentials.
pub fn solve_gaussian_oracle(
    spec: &DynamicsSpec,
    plan: &StepPlan,
    init: &GaussianState,
) -> Result<Vec<(f64, GaussianState)>> {
    solve_with_substeps(spec, plan, init, SUBSTEPS)
}

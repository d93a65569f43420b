use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PotentialSpec, Schedule};
use crate::linalg::{self, Mat2, Vec2, ZERO2, ZERO_MAT};
use crate::{Error, Result};

/// How the coefficient function `c(t, x)` of a quadratic J field depends on
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JScaling {
    /// `c(t, x) = c(x)`.
    Fixed,
    /// `c(t, x) = c(x) / β(t)`, so that `β c″` stays fixed while the
    /// temperature decays.
    InverseBeta,
}

/// `c(t, x) = s(t) · ½ (x − center)ᵀ C (x − center)` with `s` set by
/// [`JScaling`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticJ {
    pub hessian: Mat2,
    pub center: Vec2,
    pub scaling: JScaling,
}

impl QuadraticJ {
    pub fn new(hessian: Mat2, center: Vec2, scaling: JScaling) -> Result<Self> {
        if hessian[0][1] != hessian[1][0] {
            return Err(Error::InvalidParameter("c hessian must be symmetric".into()));
        }
        Ok(QuadraticJ { hessian, center, scaling })
    }

    /// Off-diagonal coupling only: `c(x) = c12 · x₁ x₂` about `center`.
    pub fn off_diagonal(c12: f64, center: Vec2, scaling: JScaling) -> Self {
        QuadraticJ { hessian: [[0.0, c12], [c12, 0.0]], center, scaling }
    }
}

/// The skew-symmetric field `J = [[0, c], [−c, 0]]` through its scalar
/// coefficient `c(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JField {
    /// Spatially constant coefficient `c(t)`. The schedule may take any
    /// sign here; it is never validated as a temperature.
    Constant {
        c: Schedule,
    },
    Quadratic(QuadraticJ),
}

/// `c`, `∇c` and `∇²c` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JEval {
    pub c: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

impl JField {
    pub fn eval(&self, t: f64, beta: f64, x: &[f64]) -> JEval {
        match self {
            JField::Constant { c } => JEval { c: c.eval(t), grad: ZERO2, hess: ZERO_MAT },
            JField::Quadratic(q) => {
                let s = match q.scaling {
                    JScaling::Fixed => 1.0,
                    JScaling::InverseBeta => 1.0 / beta,
                };
                let d = [x[0] - q.center[0], x[1] - q.center[1]];
                let hd = linalg::mat_vec(&q.hessian, &d);
                JEval {
                    c: s * 0.5 * linalg::dot(&d, &hd),
                    grad: [s * hd[0], s * hd[1]],
                    hess: linalg::scale(&q.hessian, s),
                }
            }
        }
    }
}

/// The three families of time-inhomogeneous Langevin dynamics.
///
/// * `Overdamped`: `dX = −∇V dt + √(2β(t)) dB` in `d ∈ {1, 2}`.
/// * `NonReversible`: `dX = (−∇V − γ) dt + √(2β(t)) dB` in two dimensions,
///   where `γ` is generated by a [`JField`].
/// * `Underdamped`: state `(x, v)` with `dx = v dt`,
///   `dv = (−r(t) v − V′(x)) dt + √(2r(t)) dB`, for a one-dimensional `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DynamicsSpec {
    Overdamped { potential: PotentialSpec, beta: Schedule },
    NonReversible { potential: PotentialSpec, beta: Schedule, j: JField },
    Underdamped { potential: PotentialSpec, friction: Schedule },
}

/// Target density family of a dynamics, evaluated at a frozen time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// `∝ exp(−V(x)/β(t))`.
    Annealed { potential: PotentialSpec, beta: Schedule },
    /// `∝ exp(−v²/2 − V(x))` on `(x, v)`.
    Hamiltonian { potential: PotentialSpec },
    /// Position marginal of [`ReferenceSpec::Hamiltonian`], `∝ exp(−V(x))`.
    HamiltonianPositionMarginal { potential: PotentialSpec },
}

impl ReferenceSpec {
    pub fn dim(&self) -> usize {
        match self {
            ReferenceSpec::Annealed { potential, .. } | ReferenceSpec::HamiltonianPositionMarginal { potential } => {
                potential.dim()
            }
            ReferenceSpec::Hamiltonian { .. } => 2,
        }
    }

    pub fn potential(&self) -> &PotentialSpec {
        match self {
            ReferenceSpec::Annealed { potential, .. }
            | ReferenceSpec::Hamiltonian { potential }
            | ReferenceSpec::HamiltonianPositionMarginal { potential } => potential,
        }
    }

    /// Effective temperature at `t` (1 for the Hamiltonian forms).
    pub fn temperature(&self, t: f64) -> f64 {
        match self {
            ReferenceSpec::Annealed { beta, .. } => beta.eval(t),
            _ => 1.0,
        }
    }

    pub fn validate_time(&self, t: f64) -> Result<()> {
        if let ReferenceSpec::Annealed { beta, .. } = self {
            beta.checked_eval(t)?;
        }
        Ok(())
    }

    /// `log` of the unnormalized density at `x`.
    pub fn log_density(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ReferenceSpec::Annealed { potential, beta } => -potential.value(x) / beta.eval(t),
            ReferenceSpec::Hamiltonian { potential } => -0.5 * x[1] * x[1] - potential.value(&x[..1]),
            ReferenceSpec::HamiltonianPositionMarginal { potential } => -potential.value(x),
        }
    }

    pub fn grad_log_density(&self, t: f64, x: &[f64]) -> Vec2 {
        match self {
            ReferenceSpec::Annealed { potential, beta } => {
                let g = potential.gradient(x);
                let b = beta.eval(t);
                [-g[0] / b, -g[1] / b]
            }
            ReferenceSpec::Hamiltonian { potential } => [-potential.gradient(&x[..1])[0], -x[1]],
            ReferenceSpec::HamiltonianPositionMarginal { potential } => {
                let g = potential.gradient(x);
                [-g[0], -g[1]]
            }
        }
    }

    /// Axis-aligned box carrying all but a negligible part of the mass.
    pub fn tail_box(&self, t: f64) -> (Vec2, Vec2) {
        match self {
            ReferenceSpec::Hamiltonian { potential } => {
                let (lo, hi) = potential.tail_box(1.0);
                ([lo[0], -14.0], [hi[0], 14.0])
            }
            other => other.potential().tail_box(other.temperature(t)),
        }
    }
}

impl DynamicsSpec {
    pub fn potential(&self) -> &PotentialSpec {
        match self {
            DynamicsSpec::Overdamped { potential, .. }
            | DynamicsSpec::NonReversible { potential, .. }
            | DynamicsSpec::Underdamped { potential, .. } => potential,
        }
    }

    /// Dimension of the simulated state.
    pub fn state_dim(&self) -> usize {
        match self {
            DynamicsSpec::Underdamped { .. } => 2,
            other => other.potential().dim(),
        }
    }

    /// The schedule that scales the noise: `β` or the friction `r`.
    pub fn noise_schedule(&self) -> &Schedule {
        match self {
            DynamicsSpec::Overdamped { beta, .. } | DynamicsSpec::NonReversible { beta, .. } => beta,
            DynamicsSpec::Underdamped { friction, .. } => friction,
        }
    }

    /// Coordinates that receive Brownian forcing (the velocity only for the
    /// underdamped family).
    pub fn noisy_coordinates(&self) -> core::ops::Range<usize> {
        match self {
            DynamicsSpec::Underdamped { .. } => 1..2,
            other => 0..other.state_dim(),
        }
    }

    pub fn reference(&self) -> ReferenceSpec {
        match *self {
            DynamicsSpec::Overdamped { potential, beta } | DynamicsSpec::NonReversible { potential, beta, .. } => {
                ReferenceSpec::Annealed { potential, beta }
            }
            DynamicsSpec::Underdamped { potential, .. } => ReferenceSpec::Hamiltonian { potential },
        }
    }

    /// Structural checks: dimensions per family and schedule positivity.
    pub fn validate(&self) -> Result<()> {
        self.noise_schedule().validate()?;
        match self {
            DynamicsSpec::Overdamped { potential, .. } => {
                let d = potential.dim();
                if d == 0 || d > 2 {
                    return Err(Error::UnsupportedDimension(d));
                }
            }
            DynamicsSpec::NonReversible { potential, .. } => {
                if potential.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: potential.dim() });
                }
            }
            DynamicsSpec::Underdamped { potential, .. } => {
                if potential.dim() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: potential.dim() });
                }
            }
        }
        Ok(())
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        let d = self.state_dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        Ok(())
    }

    /// Non-gradient field `γ(t, x) = aaᵀ∇log π − b + ∇·(aaᵀ)` of the
    /// decomposition of the Fokker-Planck drift.
    pub fn compute_gamma(&self, t: f64, x: &[f64]) -> Result<Vec2> {
        self.check_state(x)?;
        Ok(self.gamma_unchecked(t, x))
    }

    pub(crate) fn gamma_unchecked(&self, t: f64, x: &[f64]) -> Vec2 {
        match self {
            DynamicsSpec::Overdamped { .. } => ZERO2,
            DynamicsSpec::NonReversible { potential, beta, j } => {
                let b = beta.eval(t);
                let g = potential.gradient(x);
                let je = j.eval(t, b, x);
                [je.c * g[1] - b * je.grad[1], -je.c * g[0] + b * je.grad[0]]
            }
            DynamicsSpec::Underdamped { potential, .. } => [-x[1], potential.gradient(&x[..1])[0]],
        }
    }

    /// Reversible part `aaᵀ∇log π + ∇·(aaᵀ)` of the drift. The diffusion
    /// matrix never depends on space here, so the divergence term vanishes.
    pub fn reversible_drift(&self, t: f64, x: &[f64]) -> Result<Vec2> {
        self.check_state(x)?;
        Ok(match self {
            DynamicsSpec::Overdamped { potential, .. } | DynamicsSpec::NonReversible { potential, .. } => {
                let g = potential.gradient(x);
                [-g[0], -g[1]]
            }
            DynamicsSpec::Underdamped { friction, .. } => [0.0, -friction.eval(t) * x[1]],
        })
    }

    /// Deterministic drift `b(t, x)`.
    ///
    /// For the non-reversible family this is `−∇V − γ`, which expands to
    /// `−∇V − J∇V − β (−∂₂c, ∂₁c)`.
    pub fn drift(&self, t: f64, x: &[f64]) -> Result<Vec2> {
        self.check_state(x)?;
        Ok(self.drift_unchecked(t, x))
    }

    #[inline]
    pub(crate) fn drift_unchecked(&self, t: f64, x: &[f64]) -> Vec2 {
        match self {
            DynamicsSpec::Overdamped { potential, .. } => {
                let g = potential.gradient(x);
                [-g[0], -g[1]]
            }
            DynamicsSpec::NonReversible { .. } => {
                let g = self.potential().gradient(x);
                let gamma = self.gamma_unchecked(t, x);
                [-g[0] - gamma[0], -g[1] - gamma[1]]
            }
            DynamicsSpec::Underdamped { potential, friction } => {
                let r = friction.eval(t);
                [x[1], -r * x[1] - potential.gradient(&x[..1])[0]]
            }
        }
    }

    /// Maximum over `grid` of `|∇·(π γ)|` with the normalized reference
    /// density, by central differences with step `1e-4`.
    pub fn check_pi_gamma_divergence(&self, t: f64, grid: &[Vec2]) -> Result<f64> {
        let reference = self.reference();
        reference.validate_time(t)?;
        let log_z = crate::measure::ReferenceMeasure::new(reference)?.log_normalization(t)?;
        let d = self.state_dim();
        divergence_residual(
            d,
            grid,
            DIVERGENCE_FD_STEP,
            |x| reference.log_density(t, x) - log_z,
            |x| self.gamma_unchecked(t, x),
        )
    }
}

pub const DIVERGENCE_FD_STEP: f64 = 1e-4;

/// Densities below this (in log space) count as underflowed.
const LOG_UNDERFLOW: f64 = -708.0;

/// `max_x |∇·(e^{log_density} field)|` over `grid` by central differences
/// with step `h`. Fails when the density underflows at any grid point.
pub fn divergence_residual(
    dim: usize,
    grid: &[Vec2],
    h: f64,
    log_density: impl Fn(&[f64]) -> f64,
    field: impl Fn(&[f64]) -> Vec2,
) -> Result<f64> {
    let bad: Vec<Vec2> = grid.iter().filter(|p| !(log_density(&p[..dim]) > LOG_UNDERFLOW)).copied().collect();
    if !bad.is_empty() {
        return Err(Error::DensityUnderflow { points: bad });
    }
    let flux = |x: &Vec2, i: usize| libm::exp(log_density(&x[..dim])) * field(&x[..dim])[i];
    let mut worst = 0.0f64;
    for p in grid {
        let mut div = 0.0;
        for i in 0..dim {
            let mut xp = *p;
            let mut xm = *p;
            xp[i] += h;
            xm[i] -= h;
            div += (flux(&xp, i) - flux(&xm, i)) / (2.0 * h);
        }
        worst = worst.max(div.abs());
    }
    Ok(worst)
}

/// Uniform tensor grid with `n` points per axis on `[lo, hi]^dim`.
pub fn uniform_grid(dim: usize, lo: Vec2, hi: Vec2, n: usize) -> Vec<Vec2> {
    let coord = |k: usize, i: usize| {
        if n == 1 {
            0.5 * (lo[k] + hi[k])
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(if dim == 1 { n } else { n * n });
    if dim == 1 {
        for i in 0..n {
            out.push([coord(0, i), 0.0]);
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                out.push([coord(0, i), coord(1, j)]);
            }
        }
    }
    out
}

use libm::{cos, sin, sqrt};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat2, Vec2, ZERO2, ZERO_MAT};
use crate::{Error, Result};

/// `½ (x − center)ᵀ H (x − center)` in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub dim: usize,
    pub hessian: Mat2,
    pub center: Vec2,
}

impl QuadraticForm {
    pub fn new(dim: usize, hessian: Mat2, center: Vec2) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if dim == 2 && hessian[0][1] != hessian[1][0] {
            return Err(Error::InvalidParameter("quadratic form hessian must be symmetric".into()));
        }
        let mut h = ZERO_MAT;
        let mut c = ZERO2;
        for i in 0..dim {
            c[i] = center[i];
            for j in 0..dim {
                h[i][j] = hessian[i][j];
            }
        }
        Ok(QuadraticForm { dim, hessian: h, center: c })
    }

    pub fn one_dim(curvature: f64, center: f64) -> Self {
        QuadraticForm { dim: 1, hessian: [[curvature, 0.0], [0.0, 0.0]], center: [center, 0.0] }
    }

    pub fn diagonal(a: f64, b: f64) -> Self {
        QuadraticForm { dim: 2, hessian: [[a, 0.0], [0.0, b]], center: ZERO2 }
    }

    fn offset(&self, x: &[f64]) -> Vec2 {
        let mut d = ZERO2;
        for i in 0..self.dim {
            d[i] = x[i] - self.center[i];
        }
        d
    }
}

/// A closed-form potential `V` with analytic gradient and Hessian.
///
/// The non-quadratic variants are the one- and two-dimensional test
/// functions of the annealing experiments; their minimizers were located
/// numerically and are checked against the gradient in the tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Quadratic(QuadraticForm),
    /// `(x+1)²/2 − cos(x)/2`
    QuadraticCosine1d,
    /// `(x+2)⁴/4 − x²/2 + x/8`, non-convex
    QuarticTilted1d,
    /// `(x−2)²/2 − sin(5x)/2`, non-convex
    QuadraticSine1d,
    /// `x² + y² − cos(x+y)/2`
    QuadraticCosine2d,
    /// `x² + y² − sin(2x+2y)`, non-convex
    QuadraticSine2d,
}

const FIG1B_MIN: f64 = -0.684_036_656_678_057_9;
const FIG2A_MIN: f64 = -3.542_079_546_632_566;
const FIG2B_MIN: f64 = 1.602_714_484_059_097;
const FIG3C_MIN: f64 = 0.313_088_308_500_269_1;

impl PotentialSpec {
    /// Looks up a potential by preset name (`fig1a` … `fig3c`, `ex52`).
    /// The underdamped presets `fig6a`–`fig9b` reuse the 1D potentials.
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name {
            "fig1a" | "fig6a" | "fig8a" => PotentialSpec::Quadratic(QuadraticForm::one_dim(0.25, 1.0)),
            "fig1b" | "fig6b" | "fig8b" => PotentialSpec::QuadraticCosine1d,
            "fig2a" | "fig7a" | "fig9a" => PotentialSpec::QuarticTilted1d,
            "fig2b" | "fig7b" | "fig9b" => PotentialSpec::QuadraticSine1d,
            "fig3a" => PotentialSpec::Quadratic(QuadraticForm::diagonal(1.0, 1.0)),
            "fig3b" => PotentialSpec::QuadraticCosine2d,
            "fig3c" => PotentialSpec::QuadraticSine2d,
            "ex52" => PotentialSpec::Quadratic(QuadraticForm::diagonal(2.0, 0.1)),
            _ => return None,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            PotentialSpec::Quadratic(q) => q.dim,
            PotentialSpec::QuadraticCosine1d | PotentialSpec::QuarticTilted1d | PotentialSpec::QuadraticSine1d => 1,
            PotentialSpec::QuadraticCosine2d | PotentialSpec::QuadraticSine2d => 2,
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Quadratic(q) => {
                let d = q.offset(x);
                0.5 * linalg::dot(&d, &linalg::mat_vec(&q.hessian, &d))
            }
            PotentialSpec::QuadraticCosine1d => {
                let s = x[0] + 1.0;
                0.5 * s * s - 0.5 * cos(x[0])
            }
            PotentialSpec::QuarticTilted1d => {
                let s = x[0] + 2.0;
                let s2 = s * s;
                0.25 * s2 * s2 - 0.5 * x[0] * x[0] + x[0] / 8.0
            }
            PotentialSpec::QuadraticSine1d => {
                let s = x[0] - 2.0;
                0.5 * s * s - 0.5 * sin(5.0 * x[0])
            }
            PotentialSpec::QuadraticCosine2d => x[0] * x[0] + x[1] * x[1] - 0.5 * cos(x[0] + x[1]),
            PotentialSpec::QuadraticSine2d => x[0] * x[0] + x[1] * x[1] - sin(2.0 * x[0] + 2.0 * x[1]),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec2 {
        match self {
            PotentialSpec::Quadratic(q) => linalg::mat_vec(&q.hessian, &q.offset(x)),
            PotentialSpec::QuadraticCosine1d => [x[0] + 1.0 + 0.5 * sin(x[0]), 0.0],
            PotentialSpec::QuarticTilted1d => {
                let s = x[0] + 2.0;
                [s * s * s - x[0] + 0.125, 0.0]
            }
            PotentialSpec::QuadraticSine1d => [x[0] - 2.0 - 2.5 * cos(5.0 * x[0]), 0.0],
            PotentialSpec::QuadraticCosine2d => {
                let s = 0.5 * sin(x[0] + x[1]);
                [2.0 * x[0] + s, 2.0 * x[1] + s]
            }
            PotentialSpec::QuadraticSine2d => {
                let c = 2.0 * cos(2.0 * x[0] + 2.0 * x[1]);
                [2.0 * x[0] - c, 2.0 * x[1] - c]
            }
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Mat2 {
        match self {
            PotentialSpec::Quadratic(q) => q.hessian,
            PotentialSpec::QuadraticCosine1d => [[1.0 + 0.5 * cos(x[0]), 0.0], [0.0, 0.0]],
            PotentialSpec::QuarticTilted1d => {
                let s = x[0] + 2.0;
                [[3.0 * s * s - 1.0, 0.0], [0.0, 0.0]]
            }
            PotentialSpec::QuadraticSine1d => [[1.0 + 12.5 * sin(5.0 * x[0]), 0.0], [0.0, 0.0]],
            PotentialSpec::QuadraticCosine2d => {
                let c = 0.5 * cos(x[0] + x[1]);
                [[2.0 + c, c], [c, 2.0 + c]]
            }
            PotentialSpec::QuadraticSine2d => {
                let s = 4.0 * sin(2.0 * x[0] + 2.0 * x[1]);
                [[2.0 + s, s], [s, 2.0 + s]]
            }
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        linalg::trace(&self.hessian(x), self.dim())
    }

    /// Global minimizer, when known.
    pub fn minimizer(&self) -> Option<Vec2> {
        Some(match self {
            PotentialSpec::Quadratic(q) => {
                // only meaningful for positive definite forms
                if linalg::min_eigenvalue(&q.hessian, q.dim) > 0.0 {
                    q.center
                } else {
                    return None;
                }
            }
            PotentialSpec::QuadraticCosine1d => [FIG1B_MIN, 0.0],
            PotentialSpec::QuarticTilted1d => [FIG2A_MIN, 0.0],
            PotentialSpec::QuadraticSine1d => [FIG2B_MIN, 0.0],
            PotentialSpec::QuadraticCosine2d => ZERO2,
            PotentialSpec::QuadraticSine2d => [FIG3C_MIN, FIG3C_MIN],
        })
    }

    /// Global bounds `(λ̲, λ̄)` on the eigenvalues of the Hessian, for the
    /// strongly convex potentials.
    pub fn convexity_bounds(&self) -> Option<(f64, f64)> {
        match self {
            PotentialSpec::Quadratic(q) => {
                let ev = linalg::sym_eigenvalues(&q.hessian, q.dim);
                (ev[0] > 0.0).then_some((ev[0], ev[1]))
            }
            PotentialSpec::QuadraticCosine1d => Some((0.5, 1.5)),
            PotentialSpec::QuadraticCosine2d => Some((1.0, 3.0)),
            PotentialSpec::QuarticTilted1d | PotentialSpec::QuadraticSine1d | PotentialSpec::QuadraticSine2d => None,
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticForm> {
        match self {
            PotentialSpec::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    /// Per-axis box `[lo, hi]` outside which `exp(−V/β)` is negligible
    /// (below `e^{-70}` relative to its peak).
    ///
    /// Uses `center ± 12 √(β/κ)` where `κ` is the lower convexity bound or,
    /// for perturbed quadratics, the curvature of the quadratic part.
    pub fn tail_box(&self, beta: f64) -> (Vec2, Vec2) {
        let (center, kappa) = match self {
            PotentialSpec::QuarticTilted1d => {
                // quartic growth: the fixed box covers β up to ~10
                let w = 1.0 + 4.5 * sqrt(beta.max(1.0)).min(3.0);
                return ([FIG2A_MIN - w, 0.0], [FIG2A_MIN + w + 1.0, 0.0]);
            }
            PotentialSpec::QuadraticSine1d => ([2.0, 0.0], 1.0),
            PotentialSpec::QuadraticSine2d => (ZERO2, 2.0),
            other => (other.minimizer().unwrap_or(ZERO2), other.convexity_bounds().map(|b| b.0).unwrap_or(1.0)),
        };
        let w = 12.0 * sqrt(beta / kappa) + 2.0;
        let dim = self.dim();
        let mut lo = ZERO2;
        let mut hi = ZERO2;
        for i in 0..dim {
            lo[i] = center[i] - w;
            hi[i] = center[i] + w;
        }
        (lo, hi)
    }
}

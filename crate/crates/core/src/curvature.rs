//! Curvature matrices of the Fisher-information dissipation and their
//! certificates.
//!
//! Every family is evaluated as a pair `(F, M)` at `(t, x)`, where
//! `F = 𝔅 − ½ ∂ₜ(aaᵀ + zzᵀ)` and `M = aaᵀ + zzᵀ`. A rate `λ` is certified
//! when `F − λM ⪰ 0` at every evaluation point.
//!
//! # The underdamped determinant
//!
//! For the underdamped family with constant `z = (z₁, z₂)` and friction
//! `r(t)`, write `u = V″(x)`. Then
//!
//! ```text
//! F = [[z₁z₂,                      ½(r + r z₁z₂ + z₂² − z₁² u)],
//!      [½(r + r z₁z₂ + z₂² − z₁² u), r² + r z₂² − z₁z₂ u − ½ r′ ]]
//! ```
//!
//! and the scalar inequality that the sufficient conditions bound from below,
//!
//! ```text
//! −z₁⁴u² + 2(r(1 + z₁z₂) − z₂²) z₁² u − ((1 − z₁z₂) r + z₂²)² − 2 z₁z₂ r′ > 0,
//! ```
//!
//! has a left-hand side equal to exactly `4 det F`. Both routes therefore
//! test the same object. At `r = 3`, `z₁ = z₂ = u = 1`, `r′ = 0` the matrix is
//! `[[1, 3], [3, 11]]` with determinant `2`, and the scalar form gives `8`.
//! The checker and the certificate agree, and [`det_identity_residual`] is
//! tested against random parameters.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{exp, sqrt};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat2, Vec2, ZERO_MAT};
use crate::model::{DynamicsSpec, JField, PotentialSpec, QuadraticJ, Schedule};
use crate::{Error, Result};

/// Absolute bisection tolerance on `λ`.
pub const LAMBDA_TOL: f64 = 1e-10;

/// Diagonal diffusion profile `α_ii(x_i)` with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub enum AlphaProfile {
    /// Constant diagonal matrix.
    Constant([f64; 2]),
    /// `f(i, x_i) = [α_ii, α_ii′, α_ii″]`.
    Custom(fn(usize, f64) -> [f64; 3]),
}

impl AlphaProfile {
    /// Accepts a constant matrix, rejecting any off-diagonal entry.
    pub fn from_matrix(m: &Mat2, dim: usize) -> Result<Self> {
        if dim == 2 && (m[0][1] != 0.0 || m[1][0] != 0.0) {
            return Err(Error::NonDiagonalAlpha);
        }
        Ok(AlphaProfile::Constant([m[0][0], if dim == 2 { m[1][1] } else { 0.0 }]))
    }

    pub fn eval(&self, i: usize, xi: f64) -> [f64; 3] {
        match self {
            AlphaProfile::Constant(d) => [d[i], 0.0, 0.0],
            AlphaProfile::Custom(f) => f(i, xi),
        }
    }
}

/// The non-gradient field `γ` fed to the diagonal-α family, with its
/// Jacobian `∂ⱼγᵢ` stored at `[i][j]`.
#[derive(Debug, Clone, Copy)]
pub enum GammaField {
    Zero,
    /// `γ = c(t) (∂₂V, −∂₁V)`.
    ConstantJ {
        c: Schedule,
    },
    Custom(fn(f64, &Vec2) -> (Vec2, Mat2)),
}

impl GammaField {
    fn eval(&self, potential: &PotentialSpec, t: f64, x: &Vec2) -> (Vec2, Mat2) {
        match self {
            GammaField::Zero => ([0.0; 2], ZERO_MAT),
            GammaField::ConstantJ { c } => {
                let c = c.eval(t);
                let g = potential.gradient(x);
                let h = potential.hessian(x);
                ([c * g[1], -c * g[0]], [[c * h[1][0], c * h[1][1]], [-c * h[0][0], -c * h[0][1]]])
            }
            GammaField::Custom(f) => f(t, x),
        }
    }
}

/// Constant-`z` parameters of the underdamped family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderdampedParams {
    pub z1: f64,
    pub z2: f64,
    pub lmin: f64,
    pub lmax: f64,
    pub friction: Schedule,
}

impl UnderdampedParams {
    /// The setting of the closed-form rate: `z₁ = z₂ = 1` and constant
    /// friction `λ̄/2`.
    pub fn corollary63(lmin: f64, lmax: f64) -> Self {
        UnderdampedParams { z1: 1.0, z2: 1.0, lmin, lmax, friction: Schedule::constant(0.5 * lmax) }
    }

    /// `(F, M)` at friction `r`, its derivative `dr`, and curvature `u = V″`.
    pub fn matrices(&self, r: f64, dr: f64, u: f64) -> (Mat2, Mat2) {
        let (z1, z2) = (self.z1, self.z2);
        let off = 0.5 * (r + r * z1 * z2 + z2 * z2 - z1 * z1 * u);
        let f = [[z1 * z2, off], [off, r * r + r * z2 * z2 - z1 * z2 * u - 0.5 * dr]];
        let m = [[z1 * z1, z1 * z2], [z1 * z2, r + z2 * z2]];
        (f, m)
    }

    /// The four component matrices `(𝔅_a, 𝔅_z, 𝔅_{γ_a}, 𝔅_{γ_z})`.
    pub fn components(&self, r: f64, u: f64) -> [Mat2; 4] {
        let (z1, z2) = (self.z1, self.z2);
        let ra = [[0.0, 0.0], [0.0, r * r]];
        let rz = linalg::scale(&[[0.0, 0.5 * z1 * z2], [0.5 * z1 * z2, z2 * z2]], r);
        let rga = linalg::scale(&[[0.0, 0.5], [0.5, 0.0]], r);
        let o = 0.5 * (z2 * z2 - z1 * z1 * u);
        let rgz = [[z1 * z2, o], [o, -z1 * z2 * u]];
        [ra, rz, rga, rgz]
    }
}

/// Where the underdamped family reads `u = V″` from.
#[derive(Debug, Clone, Copy)]
pub enum CurvatureSource {
    /// `u = V″(x)` at spatial grid points `x`.
    Potential(PotentialSpec),
    /// Grid points carry `u` directly, to be sampled in `[λ̲, λ̄]`.
    Bounds,
}

/// A family of curvature matrices `(F, M)` over `(t, x)`.
#[derive(Debug, Clone, Copy)]
pub enum HessianField {
    Overdamped { potential: PotentialSpec, beta: Schedule },
    NonReversibleDiag { potential: PotentialSpec, beta: Schedule, alpha: AlphaProfile, gamma: GammaField },
    JDrift { potential: PotentialSpec, beta: Schedule, j: QuadraticJ },
    Underdamped { params: UnderdampedParams, source: CurvatureSource },
    Custom { dim: usize, field: fn(f64, &Vec2) -> Mat2, metric: fn(f64, &Vec2) -> Mat2 },
}

impl HessianField {
    pub fn overdamped(potential: PotentialSpec, beta: Schedule) -> Self {
        HessianField::Overdamped { potential, beta }
    }

    pub fn nonreversible_diag(
        potential: PotentialSpec,
        beta: Schedule,
        alpha: AlphaProfile,
        gamma: GammaField,
    ) -> Self {
        HessianField::NonReversibleDiag { potential, beta, alpha, gamma }
    }

    pub fn j_drift(potential: PotentialSpec, beta: Schedule, j: QuadraticJ) -> Result<Self> {
        if potential.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: potential.dim() });
        }
        Ok(HessianField::JDrift { potential, beta, j })
    }

    pub fn underdamped(params: UnderdampedParams, source: CurvatureSource) -> Result<Self> {
        if let CurvatureSource::Potential(v) = source {
            if v.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: v.dim() });
            }
        }
        Ok(HessianField::Underdamped { params, source })
    }

    pub fn family(&self) -> &'static str {
        match self {
            HessianField::Overdamped { .. } => "overdamped",
            HessianField::NonReversibleDiag { .. } => "nonreversible_diag",
            HessianField::JDrift { .. } => "j_drift",
            HessianField::Underdamped { .. } => "underdamped",
            HessianField::Custom { .. } => "custom",
        }
    }

    /// Matrix size.
    pub fn dim(&self) -> usize {
        match self {
            HessianField::Overdamped { potential, .. } | HessianField::NonReversibleDiag { potential, .. } => {
                potential.dim()
            }
            HessianField::JDrift { .. } | HessianField::Underdamped { .. } => 2,
            HessianField::Custom { dim, .. } => *dim,
        }
    }

    /// Dimension of the evaluation points.
    pub fn point_dim(&self) -> usize {
        match self {
            HessianField::Underdamped { .. } => 1,
            other => other.dim(),
        }
    }

    /// `(F, M)` at `(t, x)`.
    pub fn evaluate(&self, t: f64, x: &Vec2) -> (Mat2, Mat2) {
        match self {
            HessianField::Overdamped { potential, beta } => {
                let b = beta.eval(t);
                let db = beta.deriv(t);
                let d = potential.dim();
                let id = linalg::identity(d);
                let f = linalg::sub(&linalg::scale(&potential.hessian(&x[..d]), b), &linalg::scale(&id, 0.5 * db));
                (f, linalg::scale(&id, b))
            }
            HessianField::NonReversibleDiag { potential, beta, alpha, gamma } => {
                nonreversible_matrices(potential, beta, alpha, gamma, t, x)
            }
            HessianField::JDrift { potential, beta, j } => j_drift_matrices(potential, beta, j, t, x),
            HessianField::Underdamped { params, source } => {
                let r = params.friction.eval(t);
                let dr = params.friction.deriv(t);
                let u = match source {
                    CurvatureSource::Potential(v) => v.hessian(&x[..1])[0][0],
                    CurvatureSource::Bounds => x[0],
                };
                params.matrices(r, dr, u)
            }
            HessianField::Custom { field, metric, .. } => (field(t, x), metric(t, x)),
        }
    }

    /// Checks that every field without schedule issues is defined at `t`.
    fn check_time(&self, t: f64) -> Result<()> {
        match self {
            HessianField::Overdamped { beta, .. }
            | HessianField::NonReversibleDiag { beta, .. }
            | HessianField::JDrift { beta, .. } => beta.checked_eval(t).map(|_| ()),
            HessianField::Underdamped { params, .. } => params.friction.checked_eval(t).map(|_| ()),
            HessianField::Custom { .. } => Ok(()),
        }
    }
}

fn nonreversible_matrices(
    potential: &PotentialSpec,
    beta: &Schedule,
    alpha: &AlphaProfile,
    gamma: &GammaField,
    t: f64,
    x: &Vec2,
) -> (Mat2, Mat2) {
    let d = potential.dim();
    let b = beta.eval(t);
    let db = beta.deriv(t);
    let g = potential.gradient(&x[..d]);
    let h = potential.hessian(&x[..d]);
    let (gam, dgam) = gamma.eval(potential, t, x);
    let al: [[f64; 3]; 2] = [alpha.eval(0, x[0]), if d == 2 { alpha.eval(1, x[1]) } else { [0.0; 3] }];
    let mut f = ZERO_MAT;
    let mut m = ZERO_MAT;
    for i in 0..d {
        let [a, a1, a2] = al[i];
        let a_sq = a * a;
        let ra = b * a_sq * a * a1 * g[i] + b * a_sq * a_sq * h[i][i] - b * b * a_sq * a * a2;
        let rg = b * gam[i] * a * a1 - b * dgam[i][i] * a_sq;
        f[i][i] = ra + rg - 0.5 * db * a_sq;
        m[i][i] = b * a_sq;
        for j in 0..d {
            if i == j {
                continue;
            }
            let aj = al[j][0];
            let ra = b * a_sq * aj * aj * h[i][j];
            let rg = -0.5 * b * (dgam[j][i] * aj * aj + dgam[i][j] * a_sq);
            f[i][j] = ra + rg;
        }
    }
    (f, m)
}

fn j_drift_matrices(potential: &PotentialSpec, beta: &Schedule, j: &QuadraticJ, t: f64, x: &Vec2) -> (Mat2, Mat2) {
    let b = beta.eval(t);
    let db = beta.deriv(t);
    let g = potential.gradient(x);
    let h = potential.hessian(x);
    let je = JField::Quadratic(*j).eval(t, b, x);
    let (c, dc, hc) = (je.c, je.grad, je.hess);
    let r11 = dc[0] * g[1] + c * h[0][1] - b * hc[0][1];
    let r22 = -dc[1] * g[0] - c * h[1][0] + b * hc[1][0];
    let r12 = 0.5 * (c * (h[1][1] - h[0][0]) + b * (hc[0][0] - hc[1][1]) + dc[1] * g[1] - dc[0] * g[0]);
    let corr = [[r11, r12], [r12, r22]];
    let f = linalg::sub(
        &linalg::sub(&linalg::scale(&h, b), &linalg::scale(&corr, b)),
        &linalg::scale(&linalg::identity(2), 0.5 * db),
    );
    (f, linalg::scale(&linalg::identity(2), b))
}

/// How the "for all x" part of a certificate was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Checked on the listed sample points only.
    Grid,
    /// Exact over a curvature interval: the matrices are affine in `u`, so
    /// positive semidefiniteness at both endpoints covers the interval.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: CertificateKind,
    pub points: usize,
    pub times: usize,
    pub t_range: [f64; 2],
    pub point_range: [Vec2; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub family: String,
    /// Certified uniform rate, `None` when no positive `λ` is feasible.
    pub lambda: Option<f64>,
    pub feasible: bool,
    pub grid_spec: GridSpec,
    /// Minimum eigenvalue of `F − λM` over the grid at the certified `λ`
    /// (at `λ = 0` when infeasible).
    pub min_gap: f64,
    /// `(t, x)` where the certificate binds.
    pub binding: Option<(f64, Vec2)>,
    /// Best rate at each time of the grid.
    pub per_time: Vec<(f64, f64)>,
    pub conditions: BTreeMap<String, bool>,
    pub regime_flags: Vec<String>,
    pub corollary: Option<Corollary63>,
}

/// Minimum eigenvalue of `F − λM` over all evaluations, with its location.
fn min_gap(evals: &[(f64, Vec2, Mat2, Mat2)], dim: usize, lambda: f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, (_, _, f, m)) in evals.iter().enumerate() {
        let g = linalg::min_eigenvalue(&linalg::sub(f, &linalg::scale(m, lambda)), dim);
        if g < best.0 {
            best = (g, k);
        }
    }
    best
}

/// Largest `λ ∈ [0, hi]` with `min_gap(λ) ≥ 0`, by bisection; `None` when
/// even `λ = 0` fails.
fn bisect(evals: &[(f64, Vec2, Mat2, Mat2)], dim: usize, hi: f64) -> Option<f64> {
    if min_gap(evals, dim, 0.0).0 < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, hi.max(0.0));
    if min_gap(evals, dim, hi).0 >= 0.0 {
        return Some(hi);
    }
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if min_gap(evals, dim, mid).0 >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Certifies the largest uniform `λ` with `F − λM ⪰ 0` on `points × times`.
///
/// The bisection bracket is `[0, max generalized eigenvalue]` and the
/// tolerance is [`LAMBDA_TOL`]. The report is labeled
/// [`CertificateKind::Grid`]; see [`interval_certificate`] for the exact
/// underdamped variant.
pub fn lambda_certificate(field: &HessianField, points: &[Vec2], times: &[f64]) -> Result<CurvatureReport> {
    certify(field, points, times, CertificateKind::Grid)
}

/// Exact certificate for the underdamped family over `u ∈ [λ̲, λ̄]`.
pub fn interval_certificate(params: &UnderdampedParams, times: &[f64]) -> Result<CurvatureReport> {
    if !(params.lmin <= params.lmax) {
        return Err(Error::InvalidParameter("curvature bounds must satisfy λ̲ ≤ λ̄".into()));
    }
    let field = HessianField::Underdamped { params: *params, source: CurvatureSource::Bounds };
    certify(&field, &[[params.lmin, 0.0], [params.lmax, 0.0]], times, CertificateKind::Interval)
}

fn certify(field: &HessianField, points: &[Vec2], times: &[f64], kind: CertificateKind) -> Result<CurvatureReport> {
    if points.is_empty() || times.is_empty() {
        return Err(Error::InvalidParameter("certificate needs at least one point and one time".into()));
    }
    let dim = field.dim();
    let mut evals = Vec::with_capacity(points.len() * times.len());
    let mut hi = f64::NEG_INFINITY;
    for &t in times {
        field.check_time(t)?;
        for x in points {
            let (f, m) = field.evaluate(t, x);
            if !(f.iter().flatten().all(|v| v.is_finite())) {
                return Err(Error::DivergentIntegrand { at: t });
            }
            let ev = linalg::generalized_eigenvalues(&linalg::symmetrize(&f), &m, dim)
                .ok_or(Error::SingularMetric { t, point: *x })?;
            hi = hi.max(ev[1]);
            evals.push((t, *x, linalg::symmetrize(&f), m));
        }
    }
    let lambda = bisect(&evals, dim, hi).filter(|&l| l > 0.0);
    let (gap, at) = min_gap(&evals, dim, lambda.unwrap_or(0.0));
    let per_time = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let slice = &evals[k * points.len()..(k + 1) * points.len()];
            let hi_t = slice
                .iter()
                .filter_map(|(_, _, f, m)| linalg::generalized_eigenvalues(f, m, dim).map(|e| e[1]))
                .fold(f64::NEG_INFINITY, f64::max);
            (t, bisect(slice, dim, hi_t).unwrap_or(f64::NAN))
        })
        .collect();
    let lo_pt = points.iter().fold([f64::INFINITY; 2], |a, p| [a[0].min(p[0]), a[1].min(p[1])]);
    let hi_pt = points.iter().fold([f64::NEG_INFINITY; 2], |a, p| [a[0].max(p[0]), a[1].max(p[1])]);
    Ok(CurvatureReport {
        family: field.family().to_string(),
        lambda,
        feasible: lambda.is_some(),
        grid_spec: GridSpec {
            kind,
            points: points.len(),
            times: times.len(),
            t_range: [
                times.iter().copied().fold(f64::INFINITY, f64::min),
                times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ],
            point_range: [lo_pt, hi_pt],
        },
        min_gap: gap,
        binding: Some((evals[at].0, evals[at].1)),
        per_time,
        conditions: BTreeMap::new(),
        regime_flags: Vec::new(),
        corollary: None,
    })
}

/// Booleans of the underdamped sufficient conditions at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop62Flags {
    /// `−λ̄² + 2(r(1+z₂) − z₂²)λ̲ − ((1−z₂)r + z₂²)² − 2z₂r′ > 0`
    pub determinant: bool,
    /// `r² + r z₂² − λ̄ z₂ − ½r′ > 0`
    pub lower_right: bool,
    /// `0 < z₂ < (r + √(r² + 4r))/2`
    pub z2_admissible: bool,
    /// The four inequalities of the general-`z₁` form.
    pub general: bool,
}

impl Prop62Flags {
    pub fn all(&self) -> bool {
        self.determinant && self.lower_right && self.z2_admissible
    }

    pub fn to_map(&self) -> BTreeMap<String, bool> {
        let mut m = BTreeMap::new();
        m.insert("determinant".into(), self.determinant);
        m.insert("lower_right".into(), self.lower_right);
        m.insert("z2_admissible".into(), self.z2_admissible);
        m.insert("general".into(), self.general);
        m
    }
}

/// Evaluates the underdamped sufficient conditions at time `t`. The first
/// three flags use `z₁ = 1`; `general` uses `params.z1`.
pub fn check_prop62(params: &UnderdampedParams, t: f64) -> Prop62Flags {
    let r = params.friction.eval(t);
    let dr = params.friction.deriv(t);
    prop62_at(params, r, dr)
}

/// [`check_prop62`] with the friction and its derivative given directly.
pub fn prop62_at(params: &UnderdampedParams, r: f64, dr: f64) -> Prop62Flags {
    let UnderdampedParams { z1, z2, lmin, lmax, .. } = *params;
    let determinant =
        -lmax * lmax + 2.0 * (r * (1.0 + z2) - z2 * z2) * lmin - sq((1.0 - z2) * r + z2 * z2) - 2.0 * z2 * dr > 0.0;
    let lower_right = r * r + r * z2 * z2 - lmax * z2 - 0.5 * dr > 0.0;
    let z2_admissible = z2 > 0.0 && z2 < 0.5 * (r + sqrt(r * r + 4.0 * r));
    let zz = z1 * z2;
    let general = zz > 0.0
        && r * r + r * z2 * z2 - lmax * zz - 0.5 * dr > 0.0
        && r * (1.0 + zz) - z2 * z2 > 0.0
        && -sq(z1 * z1) * lmax * lmax + 2.0 * (r * (1.0 + zz) - z2 * z2) * z1 * z1 * lmin
            - sq((1.0 - zz) * r + z2 * z2)
            - 2.0 * zz * dr
            > 0.0;
    Prop62Flags { determinant, lower_right, z2_admissible, general }
}

/// Left-hand side of the general determinant inequality at curvature `u`.
pub fn det_inequality_lhs(params: &UnderdampedParams, r: f64, dr: f64, u: f64) -> f64 {
    let (z1, z2) = (params.z1, params.z2);
    let zz = z1 * z2;
    -sq(z1 * z1) * u * u + 2.0 * (r * (1.0 + zz) - z2 * z2) * z1 * z1 * u - sq((1.0 - zz) * r + z2 * z2) - 2.0 * zz * dr
}

/// `det_inequality_lhs − 4 det F`, which vanishes identically.
pub fn det_identity_residual(params: &UnderdampedParams, r: f64, dr: f64, u: f64) -> f64 {
    let (f, _) = params.matrices(r, dr, u);
    det_inequality_lhs(params, r, dr, u) - 4.0 * linalg::det(&f, 2)
}

/// Closed-form rate in the `z₁ = z₂ = 1`, `r = λ̄/2` setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corollary63 {
    pub lmin: f64,
    pub lmax: f64,
    /// Smaller root of the binding determinant at `u = λ̲`.
    pub exact: f64,
    /// `2λ̲/λ̄ − 1/λ̄²`.
    pub approx: f64,
    pub ratio: f64,
    /// Raised when `λ̲/λ̄ > 0.1`, outside the small-ratio regime of `approx`.
    pub regime_violated: bool,
}

pub const COR63_REGIME_RATIO: f64 = 0.1;

pub fn corollary63_lambda(lmin: f64, lmax: f64) -> Result<Corollary63> {
    let mut failed: Vec<&str> = Vec::new();
    if !(lmin > 0.0) {
        failed.push("λ̲ > 0");
    }
    if !(lmax > 1.0 / (2.0 * lmin) + 0.5 * lmin + 1.0) {
        failed.push("λ̄ > 1/(2λ̲) + λ̲/2 + 1");
    }
    if !(lmax >= lmin + 2.0) {
        failed.push("λ̄ ≥ λ̲ + 2");
    }
    if !failed.is_empty() {
        return Err(Error::Precondition(alloc::format!("λ̲ = {lmin}, λ̄ = {lmax} violates {}", failed.join(" and "))));
    }
    let radicand = 8.0 / lmax + lmax * lmax + 16.0 * lmin / lmax - 16.0 * lmin + 8.0 * lmin * lmin / lmax;
    let exact = 0.25 * lmax - 0.25 * sqrt(radicand);
    let approx = 2.0 * lmin / lmax - 1.0 / (lmax * lmax);
    let ratio = lmin / lmax;
    Ok(Corollary63 { lmin, lmax, exact, approx, ratio, regime_violated: ratio > COR63_REGIME_RATIO })
}

/// Fisher-information envelope
/// `I₀ e^{−2Λ(t)} + ∫_{t₀}^{t} 2 A(s) e^{−2(Λ(t) − Λ(s))} ds` with
/// `Λ(s) = ∫_{t₀}^{s} λ`.
///
/// `Λ` is accumulated node by node with Simpson's rule on each cell and the
/// outer integral uses composite Simpson on the same nodes. The node count
/// doubles until successive estimates agree to `1e-10` relative.
pub fn gronwall_envelope(
    lambda: impl Fn(f64) -> f64,
    forcing: impl Fn(f64) -> f64,
    i0: f64,
    t0: f64,
    t: f64,
) -> Result<f64> {
    if !(t >= t0) {
        return Err(Error::InvalidParameter("envelope needs t ≥ t0".into()));
    }
    if t == t0 {
        return Ok(i0);
    }
    let eval = |n: usize| -> Result<f64> {
        let h = (t - t0) / n as f64;
        let mut big_lambda = Vec::with_capacity(n + 1);
        big_lambda.push(0.0);
        let mut lam_prev = lambda(t0);
        for k in 1..=n {
            let a = t0 + (k - 1) as f64 * h;
            let lm = lambda(a + 0.5 * h);
            let lb = lambda(a + h);
            if !(lm.is_finite() && lb.is_finite() && lam_prev.is_finite()) {
                return Err(Error::DivergentIntegrand { at: a });
            }
            big_lambda.push(big_lambda[k - 1] + h / 6.0 * (lam_prev + 4.0 * lm + lb));
            lam_prev = lb;
        }
        let total = big_lambda[n];
        let mut s = 0.0;
        for (k, lk) in big_lambda.iter().enumerate() {
            let r = t0 + k as f64 * h;
            let a = forcing(r);
            if !a.is_finite() {
                return Err(Error::DivergentIntegrand { at: r });
            }
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * 2.0 * a * exp(-2.0 * (total - lk));
        }
        Ok(i0 * exp(-2.0 * total) + s * h / 3.0)
    };
    let mut n = 64;
    let mut prev = eval(n)?;
    for _ in 0..22 {
        n *= 2;
        let cur = eval(n)?;
        if (cur - prev).abs() <= 1e-10 * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { estimate: prev })
}

/// Monte-Carlo estimate of the forcing `A(t)` of the overdamped family:
/// the sample mean of `(β′/β) ΔV − (β′/β²) |∇V|²`.
pub fn estimate_correction_a(potential: &PotentialSpec, beta: &Schedule, t: f64, samples: &[Vec2]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let b = beta.checked_eval(t)?;
    let db = beta.deriv(t);
    let d = potential.dim();
    let sum: f64 = samples
        .iter()
        .map(|x| {
            let g = potential.gradient(&x[..d]);
            db / b * potential.laplacian(&x[..d]) - db / (b * b) * linalg::dot(&g, &g)
        })
        .sum();
    Ok(sum / samples.len() as f64)
}

/// Closed-form matrices by finite differences of the underlying scalar
/// functions, for cross-checking the assembled formulas.
pub mod finite_difference {
    use super::*;

    const H: f64 = 1e-4;

    fn hess_from_values(v: &PotentialSpec, x: &Vec2) -> Mat2 {
        let d = v.dim();
        let f = |p: Vec2| v.value(&p[..d]);
        let mut m = ZERO_MAT;
        for i in 0..d {
            for j in 0..d {
                let mut e = [[0.0; 2]; 2];
                e[0][i] += H;
                e[1][j] += H;
                let s = |a: f64, b: f64| f([x[0] + a * e[0][0] + b * e[1][0], x[1] + a * e[0][1] + b * e[1][1]]);
                m[i][j] = (s(1.0, 1.0) - s(1.0, -1.0) - s(-1.0, 1.0) + s(-1.0, -1.0)) / (4.0 * H * H);
            }
        }
        m
    }

    fn grad_from_values(v: &PotentialSpec, x: &Vec2) -> Vec2 {
        let d = v.dim();
        let mut g = [0.0; 2];
        for i in 0..d {
            let mut p = *x;
            let mut q = *x;
            p[i] += H;
            q[i] -= H;
            g[i] = (v.value(&p[..d]) - v.value(&q[..d])) / (2.0 * H);
        }
        g
    }

    fn dt(s: &Schedule, t: f64) -> f64 {
        let h = 1e-5 * t.abs().max(1.0);
        (s.eval(t + h) - s.eval(t - h)) / (2.0 * h)
    }

    /// Jacobian `∂ⱼγᵢ` of the non-reversible drift field by central
    /// differences of `γ` itself.
    fn gamma_jacobian(spec: &DynamicsSpec, t: f64, x: &Vec2) -> Mat2 {
        let mut m = ZERO_MAT;
        for j in 0..2 {
            let mut p = *x;
            let mut q = *x;
            p[j] += H;
            q[j] -= H;
            let gp = spec.gamma_unchecked(t, &p);
            let gq = spec.gamma_unchecked(t, &q);
            for i in 0..2 {
                m[i][j] = (gp[i] - gq[i]) / (2.0 * H);
            }
        }
        m
    }

    /// `F` for the overdamped family from second differences of `V`.
    pub fn overdamped(v: &PotentialSpec, beta: &Schedule, t: f64, x: &Vec2) -> Mat2 {
        let h = hess_from_values(v, x);
        linalg::sub(&linalg::scale(&h, beta.eval(t)), &linalg::scale(&linalg::identity(v.dim()), 0.5 * dt(beta, t)))
    }

    /// `F` for the J-drift family as `β∇²V − β sym(∇γ) − ½β′ I` with every
    /// derivative taken numerically.
    pub fn j_drift(v: &PotentialSpec, beta: &Schedule, j: &QuadraticJ, t: f64, x: &Vec2) -> Mat2 {
        let spec = DynamicsSpec::NonReversible { potential: *v, beta: *beta, j: JField::Quadratic(*j) };
        let b = beta.eval(t);
        let sym = linalg::symmetrize(&gamma_jacobian(&spec, t, x));
        let h = hess_from_values(v, x);
        linalg::sub(
            &linalg::sub(&linalg::scale(&h, b), &linalg::scale(&sym, b)),
            &linalg::scale(&linalg::identity(2), 0.5 * dt(beta, t)),
        )
    }

    /// `F` for the diagonal-α family from numerical derivatives of `V`, `α`
    /// and `γ`.
    pub fn nonreversible_diag(
        v: &PotentialSpec,
        beta: &Schedule,
        alpha: &AlphaProfile,
        gamma: &GammaField,
        t: f64,
        x: &Vec2,
    ) -> Mat2 {
        let d = v.dim();
        let b = beta.eval(t);
        let db = dt(beta, t);
        let g = grad_from_values(v, x);
        let hv = hess_from_values(v, x);
        let a = |i: usize, s: f64| alpha.eval(i, s)[0];
        let da = |i: usize| (a(i, x[i] + H) - a(i, x[i] - H)) / (2.0 * H);
        let dda = |i: usize| (a(i, x[i] + H) - 2.0 * a(i, x[i]) + a(i, x[i] - H)) / (H * H);
        let gam = |p: &Vec2| gamma.eval(v, t, p).0;
        let mut jac = ZERO_MAT;
        for j in 0..d {
            let mut p = *x;
            let mut q = *x;
            p[j] += H;
            q[j] -= H;
            let (gp, gq) = (gam(&p), gam(&q));
            for i in 0..d {
                jac[i][j] = (gp[i] - gq[i]) / (2.0 * H);
            }
        }
        let gx = gam(x);
        let mut out = ZERO_MAT;
        for i in 0..d {
            let ai = a(i, x[i]);
            out[i][i] = b * ai * ai * ai * da(i) * g[i] + b * sq(ai * ai) * hv[i][i] - b * b * ai * ai * ai * dda(i)
                + b * gx[i] * ai * da(i)
                - b * jac[i][i] * ai * ai
                - 0.5 * db * ai * ai;
            for j in 0..d {
                if j != i {
                    let aj = a(j, x[j]);
                    out[i][j] =
                        b * ai * ai * aj * aj * hv[i][j] - 0.5 * b * (jac[j][i] * aj * aj + jac[i][j] * ai * ai);
                }
            }
        }
        out
    }

    /// `F` for the underdamped family as the sum of the four component
    /// matrices minus `½∂ₜ(aaᵀ)`, with `V″` and `r′` taken numerically.
    pub fn underdamped(params: &UnderdampedParams, v: &PotentialSpec, t: f64, x: f64) -> Mat2 {
        let u = hess_from_values(v, &[x, 0.0])[0][0];
        let r = params.friction.eval(t);
        let parts = params.components(r, u);
        let sum = parts.iter().fold(ZERO_MAT, |acc, m| linalg::add(&acc, m));
        linalg::sub(&sum, &[[0.0, 0.0], [0.0, 0.5 * dt(&params.friction, t)]])
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// `n` points spaced evenly in `log t` on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n).map(|k| exp(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
}

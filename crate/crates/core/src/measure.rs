//! Reference measures, histograms and the divergence estimators built on them.
//!
//! Binned distributions are compared against the reference by evaluating its
//! density at bin midpoints and renormalizing over the bins, so the binned
//! KL and L1 never need the partition function. [`ReferenceMeasure`] still
//! computes `Z(t)` by quadrature for callers that want the normalized
//! density.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use serde::{Deserialize, Serialize};

use crate::linalg::{Mat2, Vec2};
use crate::model::ReferenceSpec;
use crate::{Error, Result};

/// Relative change between successive node doublings accepted as converged.
pub const QUADRATURE_RTOL: f64 = 1e-8;
const MAX_DOUBLINGS_1D: u32 = 16;
const MAX_DOUBLINGS_2D: u32 = 8;

/// A reference density together with the box used for its quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMeasure {
    pub spec: ReferenceSpec,
    /// Quadrature box. `None` selects the spec's tail box at each `t`.
    pub domain: Option<(Vec2, Vec2)>,
}

impl ReferenceMeasure {
    pub fn new(spec: ReferenceSpec) -> Result<Self> {
        let d = spec.dim();
        if d == 0 || d > 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        Ok(ReferenceMeasure { spec, domain: None })
    }

    pub fn with_domain(mut self, lo: Vec2, hi: Vec2) -> Self {
        self.domain = Some((lo, hi));
        self
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn bounds(&self, t: f64) -> (Vec2, Vec2) {
        self.domain.unwrap_or_else(|| self.spec.tail_box(t))
    }

    /// `log Z(t)` by composite Simpson quadrature with node doubling.
    pub fn log_normalization(&self, t: f64) -> Result<f64> {
        self.spec.validate_time(t)?;
        let (lo, hi) = self.bounds(t);
        let f = |x: &[f64]| self.spec.log_density(t, x);
        match self.dim() {
            1 => simpson_log_1d(&f, lo[0], hi[0]),
            _ => simpson_log_2d(&f, lo, hi),
        }
    }

    pub fn normalization_constant(&self, t: f64) -> Result<f64> {
        Ok(exp(self.log_normalization(t)?))
    }

    /// Normalized density `π(t, x)`.
    pub fn density(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(exp(self.spec.log_density(t, x) - self.log_normalization(t)?))
    }
}

fn simpson_weights(n: usize, i: usize) -> f64 {
    if i == 0 || i == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Returns `log ∫ exp(f)` over `[a, b]`.
fn simpson_log_1d(f: &dyn Fn(&[f64]) -> f64, a: f64, b: f64) -> Result<f64> {
    let mut n = 64usize;
    let shift = {
        let h = (b - a) / n as f64;
        (0..=n).map(|i| f(&[a + h * i as f64])).fold(f64::NEG_INFINITY, f64::max)
    };
    if !shift.is_finite() {
        return Err(Error::QuadratureNotConverged { estimate: f64::NAN });
    }
    let eval = |n: usize| {
        let h = (b - a) / n as f64;
        let s: f64 = (0..=n).map(|i| simpson_weights(n, i) * exp(f(&[a + h * i as f64]) - shift)).sum();
        s * h / 3.0
    };
    let mut prev = eval(n);
    for _ in 0..MAX_DOUBLINGS_1D {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= QUADRATURE_RTOL * cur.abs() && cur > 0.0 {
            return Ok(log(cur) + shift);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { estimate: log(prev) + shift })
}

fn simpson_log_2d(f: &dyn Fn(&[f64]) -> f64, lo: Vec2, hi: Vec2) -> Result<f64> {
    let mut n = 32usize;
    let node = |n: usize, i: usize, j: usize| {
        [lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64]
    };
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            shift = shift.max(f(&node(n, i, j)));
        }
    }
    if !shift.is_finite() {
        return Err(Error::QuadratureNotConverged { estimate: f64::NAN });
    }
    let eval = |n: usize| {
        let hx = (hi[0] - lo[0]) / n as f64;
        let hy = (hi[1] - lo[1]) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let wi = simpson_weights(n, i);
            for j in 0..=n {
                s += wi * simpson_weights(n, j) * exp(f(&node(n, i, j)) - shift);
            }
        }
        s * hx * hy / 9.0
    };
    let mut prev = eval(n);
    for _ in 0..MAX_DOUBLINGS_2D {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= QUADRATURE_RTOL * cur.abs() && cur > 0.0 {
            return Ok(log(cur) + shift);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { estimate: log(prev) + shift })
}

/// One histogram axis: `bins` equal cells on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Axis {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.width()) as usize;
        Some(i.min(self.bins - 1))
    }
}

/// Fractional padding applied on each side of the sample range.
pub const DEFAULT_PADDING: f64 = 0.05;
/// Largest out-of-range sample fraction accepted by the estimators.
pub const MAX_OUT_OF_RANGE: f64 = 0.01;

/// Counts of samples on a regular 1D or 2D grid. Bin `(i, j)` is stored at
/// `i * bins_y + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub dim: usize,
    pub axes: [Axis; 2],
    pub counts: Vec<u64>,
    pub in_range: u64,
    pub out_of_range: u64,
}

impl HistogramGrid {
    /// An empty grid with the given axes (the second is ignored in 1D).
    pub fn empty(dim: usize, axes: [Axis; 2]) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for a in &axes[..dim] {
            if a.bins == 0 || !(a.hi > a.lo) {
                return Err(Error::InvalidParameter(alloc::format!("bad histogram axis {a:?}")));
            }
        }
        let mut axes = axes;
        if dim == 1 {
            axes[1] = Axis { lo: 0.0, hi: 1.0, bins: 1 };
        }
        let n = axes[0].bins * axes[1].bins;
        Ok(HistogramGrid { dim, axes, counts: vec![0; n], in_range: 0, out_of_range: 0 })
    }

    /// Axes spanning the sample range padded by `padding` of its width on
    /// each side.
    pub fn padded_axes(dim: usize, points: &[Vec2], bins: usize, padding: f64) -> Result<[Axis; 2]> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("histogram of an empty sample".into()));
        }
        let mut axes = [Axis { lo: 0.0, hi: 1.0, bins }; 2];
        for (k, axis) in axes.iter_mut().enumerate().take(dim) {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                lo = lo.min(p[k]);
                hi = hi.max(p[k]);
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidParameter("non-finite sample".into()));
            }
            let span = if hi > lo { hi - lo } else { 1.0 };
            axis.lo = lo - padding * span;
            axis.hi = hi + padding * span;
        }
        Ok(axes)
    }

    /// Histogram of `points` over the sample range padded by 5% per axis.
    pub fn from_points(dim: usize, points: &[Vec2], bins: usize) -> Result<Self> {
        let axes = Self::padded_axes(dim, points, bins, DEFAULT_PADDING)?;
        let mut h = Self::empty(dim, axes)?;
        h.add_points(points);
        Ok(h)
    }

    /// Histogram of `points` on fixed axes.
    pub fn with_axes(dim: usize, axes: [Axis; 2], points: &[Vec2]) -> Result<Self> {
        let mut h = Self::empty(dim, axes)?;
        h.add_points(points);
        Ok(h)
    }

    pub fn add_points(&mut self, points: &[Vec2]) {
        for p in points {
            match self.bin_of(p) {
                Some(b) => {
                    self.counts[b] += 1;
                    self.in_range += 1;
                }
                None => self.out_of_range += 1,
            }
        }
    }

    /// Adds the counts of a grid with identical axes.
    pub fn merge(&mut self, other: &HistogramGrid) -> Result<()> {
        if self.dim != other.dim || self.axes != other.axes {
            return Err(Error::MismatchedGrids);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.in_range += other.in_range;
        self.out_of_range += other.out_of_range;
        Ok(())
    }

    fn bin_of(&self, p: &Vec2) -> Option<usize> {
        let i = self.axes[0].index(p[0])?;
        let j = if self.dim == 2 { self.axes[1].index(p[1])? } else { 0 };
        Some(i * self.axes[1].bins + j)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_range == 0
    }

    pub fn cell_volume(&self) -> f64 {
        let w = self.axes[0].width();
        if self.dim == 2 {
            w * self.axes[1].width()
        } else {
            w
        }
    }

    pub fn midpoint(&self, bin: usize) -> Vec2 {
        let by = self.axes[1].bins;
        let (i, j) = (bin / by, bin % by);
        if self.dim == 2 {
            [self.axes[0].midpoint(i), self.axes[1].midpoint(j)]
        } else {
            [self.axes[0].midpoint(i), 0.0]
        }
    }

    /// Empirical bin masses `p_i` over in-range samples.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.in_range.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn out_of_range_fraction(&self) -> f64 {
        let total = self.in_range + self.out_of_range;
        if total == 0 {
            0.0
        } else {
            self.out_of_range as f64 / total as f64
        }
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn check_coverage(&self) -> Result<()> {
        if self.in_range == 0 {
            return Err(Error::InvalidParameter("histogram holds no in-range samples".into()));
        }
        let f = self.out_of_range_fraction();
        if f >= MAX_OUT_OF_RANGE {
            return Err(Error::Precondition(alloc::format!(
                "{:.3}% of samples fall outside the histogram range",
                100.0 * f
            )));
        }
        Ok(())
    }
}

/// Reference bin masses: density at each midpoint, renormalized over the
/// grid. Computed in log space so that only genuinely negligible bins reach
/// zero.
pub fn reference_masses(hist: &HistogramGrid, reference: &ReferenceMeasure, t: f64) -> Result<Vec<f64>> {
    reference.spec.validate_time(t)?;
    if reference.dim() != hist.dim {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: hist.dim });
    }
    let logs: Vec<f64> =
        (0..hist.len()).map(|b| reference.spec.log_density(t, &hist.midpoint(b)[..hist.dim])).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::EmptyReferenceBin { bin: 0 });
    }
    let lse = m + log(logs.iter().map(|l| exp(l - m)).sum::<f64>());
    Ok(logs.iter().map(|l| exp(l - lse)).collect())
}

/// `Σ_{p_i > 0} p_i log(p_i / q_i)`; fails when an occupied bin has `q_i = 0`.
pub fn discrete_kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::MismatchedGrids);
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if !(qi > 0.0) {
                return Err(Error::EmptyReferenceBin { bin: i });
            }
            kl += pi * log(pi / qi);
        }
    }
    // Gibbs' inequality holds exactly; clip rounding noise below zero.
    Ok(kl.max(0.0))
}

/// `Σ |p_i − q_i|`.
pub fn discrete_l1(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::MismatchedGrids);
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Binned KL divergence of the histogram against the reference at `t`.
pub fn histogram_kl(hist: &HistogramGrid, reference: &ReferenceMeasure, t: f64) -> Result<f64> {
    hist.check_coverage()?;
    discrete_kl(&hist.masses(), &reference_masses(hist, reference, t)?)
}

/// Binned L1 distance of the histogram to the reference at `t`.
pub fn l1_distance(hist: &HistogramGrid, reference: &ReferenceMeasure, t: f64) -> Result<f64> {
    hist.check_coverage()?;
    discrete_l1(&hist.masses(), &reference_masses(hist, reference, t)?)
}

/// `l1 ≤ √(2 kl)` up to a relative slack of `1e-9`.
pub fn pinsker_holds(kl: f64, l1: f64) -> bool {
    l1 <= sqrt(2.0 * kl) * (1.0 + 1e-9)
}

pub const MIN_OCCUPIED_BINS: usize = 10;

/// Histogram estimate of the relative Fisher information
/// `∫ ⟨∇log(p/π), W ∇log(p/π)⟩ p dx` for a constant weight matrix `W`.
///
/// `∇log p` comes from central differences of `log(count + 1)` (one-sided
/// at the grid edges); `∇log π` is analytic at the bin midpoints. The
/// add-one smoothing biases the score toward zero in sparse tails, so this
/// is a biased estimator that is only trusted against Gaussian closed forms.
pub fn fisher_estimate(hist: &HistogramGrid, reference: &ReferenceMeasure, t: f64, weight: &Mat2) -> Result<f64> {
    hist.check_coverage()?;
    reference.spec.validate_time(t)?;
    if reference.dim() != hist.dim {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: hist.dim });
    }
    let occupied = hist.occupied_bins();
    if occupied < MIN_OCCUPIED_BINS {
        return Err(Error::TooFewOccupiedBins { occupied, needed: MIN_OCCUPIED_BINS });
    }
    let smoothed: Vec<f64> = hist.counts.iter().map(|&c| log(c as f64 + 1.0)).collect();
    let (nx, ny) = (hist.axes[0].bins, hist.axes[1].bins);
    let at = |i: usize, j: usize| smoothed[i * ny + j];
    let derivative = |n: usize, k: usize, w: f64, get: &dyn Fn(usize) -> f64| -> f64 {
        if n < 2 {
            0.0
        } else if k == 0 {
            (get(1) - get(0)) / w
        } else if k == n - 1 {
            (get(n - 1) - get(n - 2)) / w
        } else {
            (get(k + 1) - get(k - 1)) / (2.0 * w)
        }
    };
    let p = hist.masses();
    let (wx, wy) = (hist.axes[0].width(), hist.axes[1].width());
    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let b = i * ny + j;
            if p[b] == 0.0 {
                continue;
            }
            let mid = hist.midpoint(b);
            let glp = reference.spec.grad_log_density(t, &mid[..hist.dim]);
            let mut d = [derivative(nx, i, wx, &|k| at(k, j)) - glp[0], 0.0];
            if hist.dim == 2 {
                d[1] = derivative(ny, j, wy, &|k| at(i, k)) - glp[1];
            }
            let wd = crate::linalg::mat_vec(weight, &d);
            total += p[b] * crate::linalg::dot(&d, &wd);
        }
    }
    Ok(total)
}

/// One row of divergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub t: f64,
    pub kl: f64,
    pub l1: f64,
    pub fisher: Option<f64>,
    pub pinsker_ok: bool,
}

impl DivergenceReport {
    /// KL, L1 and optionally Fisher information of `hist` against the
    /// reference at `t`.
    pub fn evaluate(
        hist: &HistogramGrid,
        reference: &ReferenceMeasure,
        t: f64,
        fisher_weight: Option<&Mat2>,
    ) -> Result<Self> {
        hist.check_coverage()?;
        let p = hist.masses();
        let q = reference_masses(hist, reference, t)?;
        let kl = discrete_kl(&p, &q)?;
        let l1 = discrete_l1(&p, &q)?;
        let fisher = match fisher_weight {
            Some(w) => Some(fisher_estimate(hist, reference, t, w)?),
            None => None,
        };
        Ok(DivergenceReport { t, kl, l1, fisher, pinsker_ok: pinsker_holds(kl, l1) })
    }
}

/// Least-squares fit of `log kl = slope · log t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

pub fn fit_decay_rate(series: &[(f64, f64)], window: [f64; 2]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, v)| *t >= window[0] && *t <= window[1] && *t > 0.0 && *v > 0.0 && v.is_finite())
        .map(|&(t, v)| (log(t), log(v)))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { found: pts.len(), needed: MIN_FIT_POINTS });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Precondition("fit window spans a single time".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(DecayFit { window, slope, intercept: my - slope * mx, r_squared, points: pts.len() })
}

/// Exact bin masses of a Gaussian `N(mean, cov)` on the grid, renormalized
/// over the grid. 1D uses the error function; 2D integrates each cell with a
/// 5×5 Gauss-Legendre rule.
pub fn gaussian_bin_masses(hist: &HistogramGrid, mean: &Vec2, cov: &Mat2) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(hist.len());
    if hist.dim == 1 {
        let s = sqrt(cov[0][0]);
        if !(s > 0.0) {
            return Err(Error::InvalidParameter("non-positive variance".into()));
        }
        let cdf = |x: f64| 0.5 * libm::erfc(-(x - mean[0]) / (s * core::f64::consts::SQRT_2));
        let a = hist.axes[0];
        for i in 0..a.bins {
            let lo = a.lo + i as f64 * a.width();
            out.push((cdf(lo + a.width()) - cdf(lo)).max(0.0));
        }
    } else {
        let inv =
            crate::linalg::inverse(cov, 2).ok_or_else(|| Error::InvalidParameter("singular covariance".into()))?;
        let det = crate::linalg::det(cov, 2);
        let norm = 1.0 / (2.0 * core::f64::consts::PI * sqrt(det));
        const NODES: [f64; 5] =
            [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let (wx, wy) = (hist.axes[0].width(), hist.axes[1].width());
        for b in 0..hist.len() {
            let mid = hist.midpoint(b);
            let mut s = 0.0;
            for (xi, wi) in NODES.iter().zip(WEIGHTS) {
                for (yj, wj) in NODES.iter().zip(WEIGHTS) {
                    let d = [mid[0] + 0.5 * wx * xi - mean[0], mid[1] + 0.5 * wy * yj - mean[1]];
                    let q = crate::linalg::dot(&d, &crate::linalg::mat_vec(&inv, &d));
                    s += wi * wj * exp(-0.5 * q);
                }
            }
            out.push(norm * s * 0.25 * wx * wy);
        }
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("gaussian carries no mass on the grid".into()));
    }
    for m in &mut out {
        *m /= total;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PotentialSpec, QuadraticForm, Schedule};
    use proptest::prelude::*;

    fn annealed(v: PotentialSpec, beta: Schedule) -> ReferenceMeasure {
        ReferenceMeasure::new(ReferenceSpec::Annealed { potential: v, beta }).unwrap()
    }

    fn std_normal_ref() -> ReferenceMeasure {
        annealed(PotentialSpec::Quadratic(QuadraticForm::one_dim(1.0, 0.0)), Schedule::constant(1.0))
    }

    #[test]
    fn normalization_of_gaussians() {
        let z = std_normal_ref().normalization_constant(0.0).unwrap();
        assert!((z - 2.506_628_274_631_000_5).abs() < 1e-8 * z);
        let r = annealed(PotentialSpec::preset("fig1a").unwrap(), Schedule::inverse_log(4.0));
        let mut prev = f64::INFINITY;
        for t in [3.0, 10.0, 100.0, 1e4] {
            let beta = 4.0 / log(t);
            let z = r.normalization_constant(t).unwrap();
            let exact = sqrt(8.0 * core::f64::consts::PI * beta);
            assert!(((z - exact) / exact).abs() < 1e-8, "t={t}: {z} vs {exact}");
            assert!(z < prev);
            prev = z;
        }
        // Laplace scaling as β → 0
        let tiny = annealed(PotentialSpec::preset("fig1a").unwrap(), Schedule::constant(1e-8));
        let z = tiny.normalization_constant(0.0).unwrap();
        assert!((z / sqrt(1e-8) - sqrt(8.0 * core::f64::consts::PI)).abs() < 1e-6);
    }

    #[test]
    fn normalization_in_two_dimensions() {
        let r = annealed(PotentialSpec::preset("ex52").unwrap(), Schedule::constant(0.5));
        let z = r.normalization_constant(0.0).unwrap();
        let exact = 2.0 * core::f64::consts::PI * 0.5 / sqrt(2.0 * 0.1);
        assert!(((z - exact) / exact).abs() < 1e-8, "{z} vs {exact}");
    }

    #[test]
    fn two_bin_hand_values() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let kl = discrete_kl(&p, &q).unwrap();
        assert!((kl - (0.5 * log(2.0) + 0.5 * log(2.0 / 3.0))).abs() < 1e-15);
        assert!((kl - 0.143_841).abs() < 1e-6);
        let l1 = discrete_l1(&p, &q).unwrap();
        assert_eq!(l1, 0.5);
        assert!(pinsker_holds(kl, l1));
        assert_eq!(discrete_kl(&p, &p).unwrap(), 0.0);
        assert_eq!(discrete_l1(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(discrete_kl(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(discrete_kl(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::EmptyReferenceBin { bin: 1 })));
    }

    #[test]
    fn occupied_bin_with_underflowing_reference_is_an_error() {
        let r = annealed(PotentialSpec::Quadratic(QuadraticForm::one_dim(1.0, 0.0)), Schedule::constant(1e-3));
        let pts: Vec<Vec2> = (0..100).map(|i| [-5.0 + 0.1 * i as f64, 0.0]).collect();
        let h = HistogramGrid::from_points(1, &pts, 20).unwrap();
        assert!(matches!(histogram_kl(&h, &r, 0.0), Err(Error::EmptyReferenceBin { .. })));
    }

    #[test]
    fn histogram_matches_reference_masses_exactly() {
        let r = std_normal_ref();
        let axes = [Axis { lo: -5.0, hi: 5.0, bins: 50 }, Axis { lo: 0.0, hi: 1.0, bins: 1 }];
        let mut h = HistogramGrid::empty(1, axes).unwrap();
        let q = reference_masses(&h, &r, 0.0).unwrap();
        // counts proportional to q: masses equal q up to rounding
        for (c, qi) in h.counts.iter_mut().zip(&q) {
            *c = libm::round(qi * 1e12) as u64;
        }
        h.in_range = h.counts.iter().sum();
        let kl = histogram_kl(&h, &r, 0.0).unwrap();
        assert!(kl < 1e-12);
    }

    #[test]
    fn padded_range_and_binning() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]];
        let h = HistogramGrid::from_points(1, &pts, 10).unwrap();
        assert!((h.axes[0].lo + 0.05).abs() < 1e-15 && (h.axes[0].hi - 1.05).abs() < 1e-15);
        assert_eq!(h.in_range, 3);
        assert_eq!(h.out_of_range_fraction(), 0.0);
        let pts2 = [[0.0, 0.0], [1.0, 1.0], [0.2, 0.9]];
        let h2 = HistogramGrid::from_points(2, &pts2, 4).unwrap();
        assert_eq!(h2.len(), 16);
        assert_eq!(h2.counts.iter().sum::<u64>(), 3);
        let mut a = h2.clone();
        a.merge(&h2).unwrap();
        assert_eq!(a.in_range, 6);
        assert!(a.merge(&h).is_err());
    }

    #[test]
    fn coverage_guard() {
        let axes = [Axis { lo: 0.0, hi: 1.0, bins: 10 }, Axis { lo: 0.0, hi: 1.0, bins: 1 }];
        let pts: Vec<Vec2> = (0..50).map(|i| [i as f64 / 40.0, 0.0]).collect();
        let h = HistogramGrid::with_axes(1, axes, &pts).unwrap();
        assert!(h.out_of_range_fraction() > 0.01);
        assert!(histogram_kl(&h, &std_normal_ref(), 0.0).is_err());
    }

    #[test]
    fn fisher_needs_enough_bins_and_vanishes_at_equilibrium() {
        let r = std_normal_ref();
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let h = HistogramGrid::from_points(1, &pts, 50).unwrap();
        assert!(matches!(
            fisher_estimate(&h, &r, 0.0, &crate::linalg::identity(1)),
            Err(Error::TooFewOccupiedBins { occupied: 2, needed: 10 })
        ));
        // A histogram whose log-counts are exactly the reference log density has
        // zero estimated score difference on the interior.
        let axes = [Axis { lo: -3.0, hi: 3.0, bins: 60 }, Axis { lo: 0.0, hi: 1.0, bins: 1 }];
        let mut h = HistogramGrid::empty(1, axes).unwrap();
        for (b, c) in h.counts.iter_mut().enumerate() {
            let x = axes[0].midpoint(b);
            *c = libm::round(exp(-0.5 * x * x) * 1e15) as u64 - 1;
        }
        h.in_range = h.counts.iter().sum();
        let f = fisher_estimate(&h, &r, 0.0, &crate::linalg::identity(1)).unwrap();
        // only the one-sided edge derivatives carry an O(w) error
        assert!(f < 1e-3, "{f}");
    }

    #[test]
    fn decay_fit_recovers_power_laws() {
        let s: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64 * 10.0, 1.0 / (i as f64 * 10.0))).collect();
        let fit = fit_decay_rate(&s, [0.0, 1e9]).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let s: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 5.0 / sqrt(i as f64))).collect();
        let fit = fit_decay_rate(&s, [0.0, 1e9]).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - log(5.0)).abs() < 1e-12);
        assert!(matches!(fit_decay_rate(&s[..4], [0.0, 1e9]), Err(Error::InsufficientPoints { found: 4, needed: 5 })));
    }

    #[test]
    fn gaussian_bin_masses_agree_between_1d_and_2d_rules() {
        let axes = [Axis { lo: -4.0, hi: 4.0, bins: 20 }, Axis { lo: -4.0, hi: 4.0, bins: 20 }];
        let h1 = HistogramGrid::empty(1, axes).unwrap();
        let m1 = gaussian_bin_masses(&h1, &[0.3, 0.0], &[[1.5, 0.0], [0.0, 0.0]]).unwrap();
        let h2 = HistogramGrid::empty(2, axes).unwrap();
        let m2 = gaussian_bin_masses(&h2, &[0.3, 0.0], &[[1.5, 0.0], [0.0, 1.0]]).unwrap();
        // marginalize the 2D masses over y
        for i in 0..20 {
            let row: f64 = m2[i * 20..(i + 1) * 20].iter().sum();
            assert!((row - m1[i]).abs() < 1e-6, "bin {i}: {row} vs {}", m1[i]);
        }
    }

    proptest! {
        #[test]
        fn binned_divergences_are_consistent(counts in proptest::collection::vec(0u64..50, 12), shift in -1.0f64..1.0, scale in 0.3f64..3.0) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let r = annealed(PotentialSpec::Quadratic(QuadraticForm::one_dim(1.0 / scale, shift)), Schedule::constant(1.0));
            let axes = [Axis { lo: -3.0, hi: 3.0, bins: 12 }, Axis { lo: 0.0, hi: 1.0, bins: 1 }];
            let mut h = HistogramGrid::empty(1, axes).unwrap();
            h.counts.copy_from_slice(&counts);
            h.in_range = counts.iter().sum();
            let rep = DivergenceReport::evaluate(&h, &r, 0.0, None).unwrap();
            prop_assert!(rep.kl >= -1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&rep.l1));
            prop_assert!(rep.pinsker_ok, "{rep:?}");
        }
    }
}

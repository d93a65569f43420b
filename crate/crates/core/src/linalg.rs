//! Fixed-size helpers for the 1- and 2-dimensional state spaces used here.
//!
//! Every vector is a `[f64; 2]` and every matrix a `[[f64; 2]; 2]`; in one
//! dimension only the leading entry is meaningful and the rest stays zero.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO2: Vec2 = [0.0; 2];
pub const ZERO_MAT: Mat2 = [[0.0; 2]; 2];

pub fn identity(dim: usize) -> Mat2 {
    let mut m = ZERO_MAT;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

pub fn scale(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    add(a, &scale(b, -1.0))
}

pub fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = ZERO_MAT;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn dot(a: &Vec2, b: &Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn trace(m: &Mat2, dim: usize) -> f64 {
    (0..dim).map(|i| m[i][i]).sum()
}

/// Symmetric part `(m + mᵀ)/2`.
pub fn symmetrize(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[0][1] + m[1][0]);
    [[m[0][0], off], [off, m[1][1]]]
}

pub fn det(m: &Mat2, dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        _ => m[0][0] * m[1][1] - m[0][1] * m[1][0],
    }
}

/// Inverse of a 1×1 or 2×2 matrix; `None` when singular.
pub fn inverse(m: &Mat2, dim: usize) -> Option<Mat2> {
    let d = det(m, dim);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some(match dim {
        1 => [[1.0 / m[0][0], 0.0], [0.0, 0.0]],
        _ => [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]],
    })
}

/// Eigenvalues of a symmetric matrix in ascending order. For `dim == 1` both
/// entries equal `m[0][0]`.
pub fn sym_eigenvalues(m: &Mat2, dim: usize) -> [f64; 2] {
    if dim == 1 {
        return [m[0][0], m[0][0]];
    }
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let radius = libm::hypot(half_diff, 0.5 * (m[0][1] + m[1][0]));
    [mean - radius, mean + radius]
}

pub fn min_eigenvalue(m: &Mat2, dim: usize) -> f64 {
    sym_eigenvalues(m, dim)[0]
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &Mat2, dim: usize) -> Option<Mat2> {
    if !(m[0][0] > 0.0) {
        return None;
    }
    let l11 = libm::sqrt(m[0][0]);
    if dim == 1 {
        return Some([[l11, 0.0], [0.0, 0.0]]);
    }
    let l21 = m[1][0] / l11;
    let rest = m[1][1] - l21 * l21;
    if !(rest > 0.0) {
        return None;
    }
    Some([[l11, 0.0], [l21, libm::sqrt(rest)]])
}

/// Generalized eigenvalues `λ` of `field · v = λ · metric · v` in ascending
/// order, for symmetric `field` and symmetric positive definite `metric`.
/// Computed through the Cholesky reduction `L⁻¹ field L⁻ᵀ`.
pub fn generalized_eigenvalues(field: &Mat2, metric: &Mat2, dim: usize) -> Option<[f64; 2]> {
    let l = cholesky(metric, dim)?;
    if dim == 1 {
        let v = field[0][0] / (l[0][0] * l[0][0]);
        return Some([v, v]);
    }
    let linv = [[1.0 / l[0][0], 0.0], [-l[1][0] / (l[0][0] * l[1][1]), 1.0 / l[1][1]]];
    let reduced = mat_mul(&mat_mul(&linv, field), &transpose(&linv));
    Some(sym_eigenvalues(&symmetrize(&reduced), 2))
}

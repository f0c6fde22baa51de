use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Lower-triangular L with L·Lᵀ = A for symmetric positive definite A.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dim("cholesky", a.rows(), a.cols()));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Cholesky-like factor of a positive *semi*definite matrix: pivots that fall
/// below `tol·max|A|` are treated as zero and their column is dropped.
/// The result satisfies L·Lᵀ ≈ A and is suitable for sampling.
pub fn semidefinite_factor(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dim("semidefinite_factor", a.rows(), a.cols()));
    }
    let n = a.rows();
    let tol = 1e-13 * a.max_abs().max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag < -tol * 1e3 {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        if diag <= tol {
            continue;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves L·x = b in place for lower-triangular L.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let row = l.row(i);
        let mut s = b[i];
        for k in 0..i {
            s -= row[k] * b[k];
        }
        b[i] = s / row[i];
    }
}

/// Solves Lᵀ·x = b in place for lower-triangular L.
pub fn backward_substitute_transposed(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves (L·Lᵀ)·x = b in place.
pub fn cholesky_solve(l: &Matrix, b: &mut [f64]) {
    forward_substitute(l, b);
    backward_substitute_transposed(l, b);
}

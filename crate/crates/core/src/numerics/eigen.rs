//! Cyclic Jacobi eigensolver for small dense symmetric matrices, and the
//! Frobenius projection onto the positive semidefinite cone built on it.

use super::matrix::{Matrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
///
/// Column `k` of `vectors` is the unit eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// V·diag(f(λ))·Vᵀ, skipping eigenpairs where f returns zero.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> SymmetricMatrix {
        let m = self.values.len();
        let mut out = Matrix::zeros(m, m);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..m {
                let vi = w * self.vectors[(i, k)];
                if vi == 0.0 {
                    continue;
                }
                for j in i..m {
                    out[(i, j)] += vi * self.vectors[(j, k)];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        SymmetricMatrix::symmetrized(out)
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations with threshold sweeps.
pub fn symmetric_eigendecomposition(s: &SymmetricMatrix) -> Result<SymmetricEigen> {
    let m = s.order();
    jacobi(s.as_slice().to_vec(), Matrix::identity(m), m)
}

/// Jacobi iteration started in the basis `guess` (orthogonal). When `guess`
/// nearly diagonalizes `s`, e.g. the eigenvectors of a previous iterate, only
/// a sweep or two is needed.
pub fn symmetric_eigendecomposition_warm(
    s: &SymmetricMatrix,
    guess: &Matrix,
) -> Result<SymmetricEigen> {
    let m = s.order();
    if guess.rows() != m || guess.cols() != m {
        return Err(Error::dim("symmetric_eigendecomposition_warm", m, guess.rows()));
    }
    let rotated = guess.transpose().matmul(s.as_matrix())?.matmul(guess)?;
    let rotated = SymmetricMatrix::symmetrized(rotated);
    jacobi(rotated.as_slice().to_vec(), guess.clone(), m)
}

// Classical cyclic Jacobi over the upper triangle of `a` (row-major m×m),
// accumulating rotations into `v`.
fn jacobi(mut a: Vec<f64>, mut v: Matrix, m: usize) -> Result<SymmetricEigen> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("eigendecomposition input is not finite".into()));
    }
    let mut d: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; m];

    let mut converged = m <= 1;
    let mut off = 0.0;
    for sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        off = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                off += a[p * m + q].abs();
            }
        }
        if off == 0.0 {
            converged = true;
            break;
        }
        let thresh = if sweep < 3 {
            0.2 * off / (m * m) as f64
        } else {
            0.0
        };
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * m + q] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * m + q] = 0.0;
                let rot = |a: &mut [f64], i: usize, j: usize| {
                    let g = a[i];
                    let h = a[j];
                    a[i] = g - s * (h + g * tau);
                    a[j] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rot(&mut a, j * m + p, j * m + q);
                }
                for j in (p + 1)..q {
                    rot(&mut a, p * m + j, j * m + q);
                }
                for j in (q + 1)..m {
                    rot(&mut a, p * m + j, q * m + j);
                }
                let vs = v.as_mut_slice();
                for j in 0..m {
                    rot(vs, j * m + p, j * m + q);
                }
            }
        }
        for i in 0..m {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            algorithm: "cyclic Jacobi",
            iterations: MAX_SWEEPS,
            residual: off,
        });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = Matrix::from_fn(m, m, |i, k| v[(i, order[k])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Nearest positive semidefinite matrix in Frobenius norm: negative
/// eigenvalues are clipped to zero.
pub fn psd_project(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = symmetric_eigendecomposition(s)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Reusable PSD projector that warm-starts each decomposition from the
/// eigenbasis of the previous call. Used by iterative solvers whose
/// successive arguments change slowly.
#[derive(Clone, Debug, Default)]
pub struct PsdProjector {
    basis: Option<Matrix>,
}

impl PsdProjector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn project(&mut self, s: &SymmetricMatrix) -> Result<(SymmetricMatrix, SymmetricEigen)> {
        let eig = match &self.basis {
            Some(basis) if basis.rows() == s.order() => {
                symmetric_eigendecomposition_warm(s, basis)?
            }
            _ => symmetric_eigendecomposition(s)?,
        };
        let projected = eig.reconstruct_with(|l| l.max(0.0));
        self.basis = Some(eig.vectors.clone());
        Ok((projected, eig))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_analytic() {
        let s = SymmetricMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap())
            .unwrap();
        let eig = symmetric_eigendecomposition(&s).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_sorts_and_permutes() {
        let s = SymmetricMatrix::from_diagonal(&[1.0, 5.0, -2.0]);
        let eig = symmetric_eigendecomposition(&s).unwrap();
        assert_eq!(eig.values, vec![5.0, 1.0, -2.0]);
        for k in 0..3 {
            let col = eig.vectors.column(k);
            assert_eq!(col.iter().filter(|v| v.abs() == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|v| **v == 0.0).count(), 2);
        }
    }

    #[test]
    fn clip_of_indefinite_diagonal() {
        let p = psd_project(&SymmetricMatrix::from_diagonal(&[1.0, -2.0])).unwrap();
        assert_eq!(p, SymmetricMatrix::from_diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn empty_and_scalar() {
        let eig = symmetric_eigendecomposition(&SymmetricMatrix::zeros(0)).unwrap();
        assert!(eig.values.is_empty());
        let eig = symmetric_eigendecomposition(&SymmetricMatrix::from_diagonal(&[-4.0])).unwrap();
        assert_eq!(eig.values, vec![-4.0]);
    }

    #[test]
    fn non_finite_rejected() {
        let s = SymmetricMatrix::from_diagonal(&[f64::NAN, 1.0]);
        assert!(symmetric_eigendecomposition(&s).is_err());
    }
}

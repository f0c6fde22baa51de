use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut out = Matrix::zeros(m, m);
        for i in 0..m {
            out[(i, i)] = 1.0;
        }
        out
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut out = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out[(i, i)] = d;
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("Matrix::from_row_major", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dim("Matrix::from_rows", cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).take(self.rows).collect()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim("Matrix::matmul", self.cols, rhs.rows));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim("Matrix::matvec", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |A(i,j) - A(j,i)|; `f64::INFINITY` for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dim("Matrix::sub", self.data.len(), rhs.data.len()));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix whose symmetry is enforced at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Relative asymmetry accepted by [`SymmetricMatrix::new`].
    pub const ASYMMETRY_TOLERANCE: f64 = 1e-12;

    /// Accepts a matrix that is symmetric up to round-off and makes it exactly symmetric.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Contract(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let scale = m.max_abs().max(1.0);
        let asym = m.max_asymmetry();
        if asym > Self::ASYMMETRY_TOLERANCE * scale {
            return Err(Error::Contract(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Returns (A + Aᵀ)/2 regardless of the input's asymmetry.
    pub fn symmetrized(mut m: Matrix) -> Self {
        assert!(m.is_square(), "symmetrized requires a square matrix");
        let order = m.rows();
        for i in 0..order {
            for j in (i + 1)..order {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        SymmetricMatrix(m)
    }

    pub fn zeros(order: usize) -> Self {
        SymmetricMatrix(Matrix::zeros(order, order))
    }

    pub fn identity(order: usize) -> Self {
        SymmetricMatrix(Matrix::identity(order))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(Matrix::from_diagonal(diag))
    }

    /// Rank-one outer product v·vᵀ.
    pub fn outer(v: &[f64]) -> Self {
        SymmetricMatrix(Matrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j]))
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
        self.0[(j, i)] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.0[(i, i)]).sum()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Frobenius inner product ⟨A, B⟩ = Tr(AB).
    pub fn frobenius_dot(&self, other: &SymmetricMatrix) -> f64 {
        dot(self.as_slice(), other.as_slice())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Sum of absolute values of all entries.
    pub fn l1_norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v.abs()).sum()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

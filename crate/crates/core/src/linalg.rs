//! Small dense linear algebra: row-major matrices and an LU factorization
//! with partial pivoting. Sizes in this crate stay in the hundreds, so the
//! textbook algorithms are adequate.

use std::ops::{Index, IndexMut};

use crate::error::{CldgError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CldgError::DimensionMismatch(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// y = A x
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|r| self.row(r).iter().zip(x).fold(S::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// y += factor * A x
    pub fn matvec_add(&self, factor: S, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.rows, "matvec dimension mismatch");
        for (r, yr) in y.iter_mut().enumerate() {
            let dot = self.row(r).iter().zip(x).fold(S::zero(), |acc, (&a, &b)| acc + a * b);
            *yr += factor * dot;
        }
    }

    /// y = Aᵀ x
    pub fn matvec_transposed(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.rows, "matvec dimension mismatch");
        let mut y = vec![S::zero(); self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == S::zero() {
                continue;
            }
            for (yc, &a) in y.iter_mut().zip(self.row(r)) {
                *yc += a * xr;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == S::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(r);
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// A · Bᵀ without forming the transpose.
    pub fn matmul_transposed(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.rows);
        for r in 0..self.rows {
            let a = self.row(r);
            for c in 0..other.rows {
                out[(r, c)] = a.iter().zip(other.row(c)).fold(S::zero(), |acc, (&x, &y)| acc + x * y);
            }
        }
        out
    }

    pub fn scale(&mut self, factor: S) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// self += factor * other
    pub fn add_scaled(&mut self, factor: S, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn lu(&self) -> Result<LuFactorization<S>> {
        LuFactorization::new(self)
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// PA = LU with unit lower-triangular L, stored compactly.
#[derive(Debug, Clone)]
pub struct LuFactorization<S> {
    n: usize,
    lu: DenseMatrix<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactorization<S> {
    pub fn new(a: &DenseMatrix<S>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(CldgError::DimensionMismatch(format!("LU of a non-square {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = a.max_abs() * S::epsilon() * S::from_usize(n.max(1)).unwrap();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_abs = lu[(col, col)].abs();
            for r in col + 1..n {
                let v = lu[(r, col)].abs();
                if v > pivot_abs {
                    pivot_abs = v;
                    pivot_row = r;
                }
            }
            if pivot_abs <= tiny || !pivot_abs.is_finite() {
                return Err(CldgError::SingularMatrix { column: col });
            }
            if pivot_row != col {
                perm.swap(col, pivot_row);
                for c in 0..n {
                    let tmp = lu[(col, c)];
                    lu[(col, c)] = lu[(pivot_row, c)];
                    lu[(pivot_row, c)] = tmp;
                }
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                if factor == S::zero() {
                    continue;
                }
                lu[(r, col)] = factor;
                for c in col + 1..n {
                    let u = lu[(col, c)];
                    lu[(r, c)] -= factor * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let row = self.lu.row(r);
            let mut acc = x[r];
            for c in 0..r {
                acc -= row[c] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let row = self.lu.row(r);
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= row[c] * x[c];
            }
            x[r] = acc / row[r];
        }
        x
    }

    /// Solves Aᵀ x = b.
    pub fn solve_transposed(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w.
        let mut z = b.to_vec();
        for c in 0..n {
            let mut acc = z[c];
            for r in 0..c {
                acc -= self.lu[(r, c)] * z[r];
            }
            z[c] = acc / self.lu[(c, c)];
        }
        for c in (0..n).rev() {
            let mut acc = z[c];
            for r in c + 1..n {
                acc -= self.lu[(r, c)] * z[r];
            }
            z[c] = acc;
        }
        let mut x = vec![S::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Euclidean norm.
pub fn norm2<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &x| acc + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix<f64> {
        DenseMatrix::from_row_major(3, 3, vec![1.0, 2.0, 0.5, 0.0, 3.0, 1.0, 4.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn lu_solves_both_orientations() {
        let a = sample();
        let lu = a.lu().unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
        let xt = lu.solve_transposed(&b);
        let rt = a.transpose().matvec(&xt);
        for i in 0..3 {
            assert!((rt[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(a.lu(), Err(CldgError::SingularMatrix { .. })));
    }

    #[test]
    fn matmul_transposed_agrees_with_explicit_transpose() {
        let a = sample();
        let b = sample().transpose();
        let direct = a.matmul(&b.transpose());
        let fused = a.matmul_transposed(&b);
        assert_eq!(direct, fused);
    }
}

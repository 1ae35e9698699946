//! Small dense linear algebra: row-major matrices, Householder least squares
//! and Cholesky solves. Sized for design matrices of a few hundred columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pivot tolerance (relative to the largest column norm) below which a design
/// is declared rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape(format!("ragged rows: {} vs {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `AᵀA` (optionally row-weighted) and `Aᵀy`.
    pub fn normal_equations(&self, y: &[T], weights: Option<&[T]>) -> (Matrix<T>, Vec<T>) {
        let p = self.cols;
        let mut ata = Matrix::zeros(p, p);
        let mut aty = vec![T::zero(); p];
        for r in 0..self.rows {
            let w = weights.map_or(T::one(), |w| w[r]);
            let row = self.row(r);
            for i in 0..p {
                let wi = w * row[i];
                if wi == T::zero() {
                    continue;
                }
                aty[i] = aty[i] + wi * y[r];
                for j in i..p {
                    ata.data[i * p + j] = ata.data[i * p + j] + wi * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                ata.data[i * p + j] = ata.data[j * p + i];
            }
        }
        (ata, aty)
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    pub rss: T,
}

/// Minimizes `‖Ax − y‖²` by Householder QR.
///
/// Fails with [`Error::SingularDesign`] when a diagonal entry of R falls below
/// [`RANK_TOL`] times the largest column norm.
pub fn lstsq<T: Scalar>(a: &Matrix<T>, y: &[T]) -> Result<LeastSquares<T>> {
    let (m, n) = (a.rows, a.cols);
    if y.len() != m {
        return Err(Error::LengthMismatch { left: m, right: y.len() });
    }
    if m <= n {
        return Err(Error::Shape(format!("need more rows than columns, got {m}x{n}")));
    }
    // Column-major working copy.
    let mut q: Vec<Vec<T>> = (0..n).map(|c| (0..m).map(|r| a.get(r, c)).collect()).collect();
    let mut rhs = y.to_vec();
    let scale = q
        .iter()
        .map(|col| dot(col, col).sqrt())
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc });
    if scale == T::zero() {
        return Err(Error::SingularDesign);
    }
    let tol = T::of(RANK_TOL) * scale;
    let mut diag = vec![T::zero(); n];

    for k in 0..n {
        let norm = q[k][k..].iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if norm <= tol {
            return Err(Error::SingularDesign);
        }
        let alpha = if q[k][k] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place.
        q[k][k] = q[k][k] - alpha;
        let vnorm2 = q[k][k..].iter().fold(T::zero(), |acc, &v| acc + v * v);
        diag[k] = alpha;
        if vnorm2 == T::zero() {
            continue;
        }
        let (head, tail) = q.split_at_mut(k + 1);
        let v = &head[k][k..];
        for col in tail.iter_mut() {
            let s = dot(v, &col[k..]) * T::of(2.0) / vnorm2;
            for (c, &vi) in col[k..].iter_mut().zip(v) {
                *c = *c - s * vi;
            }
        }
        let s = dot(v, &rhs[k..]) * T::of(2.0) / vnorm2;
        for (c, &vi) in rhs[k..].iter_mut().zip(v) {
            *c = *c - s * vi;
        }
        if diag[k].abs() <= tol {
            return Err(Error::SingularDesign);
        }
    }

    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s = s - q[j][k] * x[j];
        }
        x[k] = s / diag[k];
    }
    let rss = rhs[n..].iter().fold(T::zero(), |acc, &v| acc + v * v);
    Ok(LeastSquares { coefficients: x, rss })
}

/// Residual sum of squares of `x` against `(a, y)`, computed directly.
pub fn rss<T: Scalar>(a: &Matrix<T>, x: &[T], y: &[T]) -> T {
    a.matvec(x).iter().zip(y).fold(T::zero(), |acc, (&p, &t)| acc + (t - p) * (t - p))
}

/// Solves `Ax = b` for symmetric positive definite `A` by Cholesky.
pub fn cholesky_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Shape(format!("cholesky_solve: {}x{} with rhs {}", a.rows, a.cols, b.len())));
    }
    let mut l = Matrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::SingularDesign);
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    let mut z = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l.get(i, k) * z[k];
        }
        z[i] = s / l.get(i, i);
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s = s - l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

/// `(AᵀWA + λI) x = AᵀWy`.
pub fn ridge<T: Scalar>(a: &Matrix<T>, y: &[T], weights: Option<&[T]>, lambda: T) -> Result<Vec<T>> {
    if y.len() != a.rows {
        return Err(Error::LengthMismatch { left: a.rows, right: y.len() });
    }
    let (mut ata, aty) = a.normal_equations(y, weights);
    for i in 0..a.cols {
        let v = ata.get(i, i) + lambda;
        ata.set(i, i, v);
    }
    cholesky_solve(&ata, &aty)
}

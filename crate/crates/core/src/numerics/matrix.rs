use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const J: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixDoc", into = "MatrixDoc")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Serialized form: `{"rows", "cols", "data": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl From<ComplexMatrix> for MatrixDoc {
    fn from(m: ComplexMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl TryFrom<MatrixDoc> for ComplexMatrix {
    type Error = Error;

    fn try_from(d: MatrixDoc) -> Result<Self> {
        if d.rows == 0 || d.cols == 0 || d.data.len() != d.rows * d.cols {
            return Err(Error::dims(format!("{}x{} entries", d.rows, d.cols), d.data.len()));
        }
        if d.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        Ok(Self {
            rows: d.rows,
            cols: d.cols,
            data: d.data,
        })
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows * cols > 0, "matrix must have at least one entry");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 || rows[0].is_empty() {
            return Err(Error::Empty("matrix rows"));
        }
        let c = rows[0].len();
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::dims(format!("{c} columns"), format!("{} columns", bad.len())));
        }
        let data: Vec<C64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// Builds a real matrix from row-major values.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims(rows * cols, values.len()));
        }
        Ok(Self::from_fn(rows, cols, |r, c| C64::new(values[r * cols + c], 0.0)))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C64]) {
        for (r, v) in values.iter().enumerate() {
            self[(r, c)] = *v;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!("{} rows in right operand", self.cols), other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols {
            return Err(Error::dims(self.cols, x.len()));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// In-place `self += other`; shapes must match.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise distance to `other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// True iff `max |m m^H - I| < tol`. Non-square input is never unitary.
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_residual(m) < tol
}

pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let p = m.matmul(&m.adjoint()).expect("square product");
    p.max_abs_diff(&ComplexMatrix::identity(m.rows()))
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, J], vec![J, ZERO]]).unwrap()
    }

    #[test]
    fn identity_is_left_neutral() {
        let x = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.25)],
            vec![C64::new(3.0, 0.0), C64::new(0.0, -1.0)],
        ])
        .unwrap();
        assert_eq!(ComplexMatrix::identity(2).matmul(&x).unwrap(), x);
    }

    #[test]
    fn cross_squared_is_minus_identity() {
        let c = cross();
        let sq = c.matmul(&c).unwrap();
        let minus_i = ComplexMatrix::identity(2).scale(C64::new(-1.0, 0.0));
        assert!(sq.max_abs_diff(&minus_i) < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(a.mul_vec(&[ONE; 2]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let r = ComplexMatrix::from_rows(&[vec![C64::new(f64::NAN, 0.0)]]);
        assert!(r.is_err());
    }

    #[test]
    fn unitarity_checks() {
        assert!(is_unitary(&ComplexMatrix::identity(5), 1e-12));
        assert!(is_unitary(&cross(), 1e-12));
        assert!(!is_unitary(&ComplexMatrix::identity(3).scale(C64::new(0.9, 0.0)), 1e-3));
        assert!(!is_unitary(&ComplexMatrix::zeros(2, 3), 1.0));
    }
}

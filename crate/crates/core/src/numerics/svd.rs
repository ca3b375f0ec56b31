//! One-sided (Hestenes) Jacobi SVD for complex square matrices.
//!
//! Column pairs of a working copy `A V` are rotated until mutually
//! orthogonal; the column norms are then the singular values and the
//! normalized columns the left singular vectors.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const ROTATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Singular values, nonnegative and sorted descending.
    pub s: Vec<f64>,
    pub vh: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.s.len();
        let us = ComplexMatrix::from_fn(n, n, |r, c| self.u[(r, c)] * self.s[c]);
        us.matmul(&self.vh).expect("square factors")
    }
}

pub fn svd(w: &ComplexMatrix) -> Result<Svd> {
    if !w.is_square() {
        return Err(Error::NotSquare {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    let n = w.rows();
    // Column-major working storage keeps the pair updates cache friendly.
    let mut a: Vec<Vec<C64>> = (0..n).map(|c| w.column(c)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { ONE } else { ZERO }).collect())
        .collect();

    let mut converged = n == 1;
    let mut worst = 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        worst = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let off = g / (alpha * beta).sqrt();
                worst = worst.max(off);
                if off < ROTATION_TOL {
                    continue;
                }
                // Rotate (a_p, a_q e^{-i chi}) so that the real inner product vanishes.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        converged = worst < ROTATION_TOL;
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            sweeps,
            residual: worst,
        });
    }

    let mut order: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(i, col)| (col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), i))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let scale = order[0].0.max(f64::MIN_POSITIVE);
    let mut u_cols: Vec<Option<Vec<C64>>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut vh = ComplexMatrix::zeros(n, n);
    for (k, &(sigma, idx)) in order.iter().enumerate() {
        s.push(sigma);
        for r in 0..n {
            vh[(k, r)] = v[idx][r].conj();
        }
        if sigma > scale * 1e-14 {
            u_cols.push(Some(a[idx].iter().map(|z| z / sigma).collect()));
        } else {
            u_cols.push(None);
        }
    }
    let u_cols = complete_orthonormal(u_cols, n);
    let mut u = ComplexMatrix::zeros(n, n);
    for (c, col) in u_cols.iter().enumerate() {
        u.set_column(c, col);
    }
    Ok(Svd { u, s, vh })
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    let xp = &mut lo[p];
    let xq = &mut hi[0];
    for (x, y) in xp.iter_mut().zip(xq.iter_mut()) {
        let yq = *y * phase;
        let nx = *x * c - yq * s;
        let ny = *x * s + yq * c;
        *x = nx;
        *y = ny;
    }
}

/// Fills missing columns (null-space directions) by Gram-Schmidt over the
/// standard basis so that the result is unitary.
fn complete_orthonormal(cols: Vec<Option<Vec<C64>>>, n: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = cols.iter().flatten().cloned().collect();
    let mut candidates = 0..n;
    cols.into_iter()
        .map(|col| match col {
            Some(c) => c,
            None => loop {
                let e = candidates.next().expect("basis completion exhausted");
                let mut x: Vec<C64> = (0..n).map(|r| if r == e { ONE } else { ZERO }).collect();
                for b in &basis {
                    let proj: C64 = b.iter().zip(&x).map(|(bi, xi)| bi.conj() * xi).sum();
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi -= proj * bi;
                    }
                }
                let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    let x: Vec<C64> = x.iter().map(|z| z / norm).collect();
                    basis.push(x.clone());
                    break x;
                }
            },
        })
        .collect()
}

//! Complex linear algebra, FFT, unit conversion and seeded sampling.

mod fft;
mod matrix;
mod rng;
mod svd;
mod units;

pub use fft::{fft2d, fft_in_place, ifft2d};
pub use matrix::{is_unitary, unitarity_residual, vec_norm, ComplexMatrix, C64, J, ONE, ZERO};
pub use rng::{sample, Distribution, Rng};
pub use svd::{svd, Svd, MAX_SWEEPS, ROTATION_TOL};
pub use units::{db_to_field, db_to_power, db_to_ratio, dbm_to_mw, mw_to_dbm, power_ratio_to_loss_db};

/// Matrix with i.i.d. real N(0, 1) entries.
pub fn random_gaussian_matrix(n: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.standard_normal(), 0.0))
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.standard_normal(), rng.standard_normal()));
    // Modified Gram-Schmidt on columns; phases fixed by positive R diagonal.
    let mut q = g.clone();
    for c in 0..n {
        let mut v = q.column(c);
        for p in 0..c {
            let qp = q.column(p);
            let proj: C64 = qp.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(&qp) {
                *vi -= proj * qi;
            }
        }
        let norm = vec_norm(&v);
        let v: Vec<C64> = v.iter().map(|z| z / norm).collect();
        q.set_column(c, &v);
    }
    q
}

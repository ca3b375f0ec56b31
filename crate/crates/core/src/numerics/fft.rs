//! Iterative radix-2 FFT and its row/column 2-D extension.

use std::f64::consts::PI;

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// In-place FFT of a power-of-two length buffer. `inverse` uses the
/// positive exponent and divides by the length.
pub fn fft_in_place(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n == 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let step = C64::from_polar(1.0, sign * 2.0 * PI / len as f64);
        for start in (0..n).step_by(len) {
            let mut w = C64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
                w *= step;
            }
        }
        len <<= 1;
    }
    if inverse {
        let inv = 1.0 / n as f64;
        buf.iter_mut().for_each(|z| *z *= inv);
    }
}

/// 2-D DFT of a real image. Non power-of-two or non-square images are
/// zero-padded to the next power-of-two square.
pub fn fft2d(image: &[Vec<f64>]) -> Result<ComplexMatrix> {
    let rows = image.len();
    let cols = image.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("image"));
    }
    if image.iter().any(|r| r.len() != cols) {
        return Err(Error::Format {
            what: "image",
            reason: "ragged rows".into(),
        });
    }
    let side = rows.max(cols).next_power_of_two();
    let mut grid = ComplexMatrix::zeros(side, side);
    for (r, row) in image.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            grid[(r, c)] = C64::new(v, 0.0);
        }
    }
    Ok(transform2d(grid, false))
}

pub fn ifft2d(spectrum: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = spectrum.rows();
    if !spectrum.is_square() || !n.is_power_of_two() {
        return Err(Error::invalid("spectrum", "must be square with power-of-two side"));
    }
    Ok(transform2d(spectrum.clone(), true))
}

fn transform2d(mut grid: ComplexMatrix, inverse: bool) -> ComplexMatrix {
    let n = grid.rows();
    let mut line = vec![ZERO; n];
    for r in 0..n {
        line.copy_from_slice(grid.row(r));
        fft_in_place(&mut line, inverse);
        for (c, v) in line.iter().enumerate() {
            grid[(r, c)] = *v;
        }
    }
    for c in 0..n {
        for (r, v) in line.iter_mut().enumerate() {
            *v = grid[(r, c)];
        }
        fft_in_place(&mut line, inverse);
        grid.set_column(c, &line);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_stay_zero() {
        let f = fft2d(&vec![vec![0.0; 8]; 8]).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn constant_image_is_dc_only() {
        let f = fft2d(&vec![vec![2.5; 8]; 8]).unwrap();
        assert!((f[(0, 0)] - C64::new(2.5 * 64.0, 0.0)).norm() < 1e-12);
        let others: f64 = f.as_slice()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(others < 1e-12);
    }

    #[test]
    fn pads_to_power_of_two() {
        let f = fft2d(&vec![vec![1.0; 3]; 5]).unwrap();
        assert_eq!(f.rows(), 8);
        assert!((f[(0, 0)].re - 15.0).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        assert!(fft2d(&[]).is_err());
        assert!(fft2d(&[vec![]]).is_err());
    }
}

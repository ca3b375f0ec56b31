//! Rectangular (Clements) decomposition of a unitary into MZIs.
//!
//! Alternating right- and left-nulling sweeps reduce the unitary to a
//! diagonal; the left-side MZIs are then commuted through that diagonal so
//! the whole mesh reads `U = D · T_K ⋯ T_1` in propagation order, leaving a
//! lossless output phase screen `D`.

use std::f64::consts::PI;

use super::{MziPlacement, Role};
use crate::device::{mzi_transfer, MziParams, PhasePair, Transfer2};
use crate::error::{Error, Result};
use crate::numerics::{unitarity_residual, ComplexMatrix, C64};

pub const UNITARY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct MeshDecomposition {
    pub n: usize,
    /// Placements in propagation order, columns assigned.
    pub placements: Vec<MziPlacement>,
    /// Output phases (radians), one per waveguide.
    pub phase_screen: Vec<f64>,
}

fn wrap_2pi(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

fn ideal(ph: PhasePair) -> Transfer2 {
    mzi_transfer(&MziParams::lossless(), ph)
}

/// Phases that zero the left element of the column pair when `T^H` is
/// applied from the right: `a e^{-jφ} sin(θ/2) + b cos(θ/2) = 0`.
fn right_null(a: C64, b: C64) -> PhasePair {
    let theta = 2.0 * b.norm().atan2(a.norm());
    let phi = if a.norm() == 0.0 || b.norm() == 0.0 {
        0.0
    } else {
        wrap_2pi(a.arg() - b.arg() - PI)
    };
    PhasePair::new(theta, phi)
}

/// Phases that zero the lower element of the row pair when `T` is applied
/// from the left: `e^{jφ} cos(θ/2) a - sin(θ/2) b = 0`.
fn left_null(a: C64, b: C64) -> PhasePair {
    let theta = 2.0 * a.norm().atan2(b.norm());
    let phi = if a.norm() == 0.0 || b.norm() == 0.0 {
        0.0
    } else {
        wrap_2pi(b.arg() - a.arg())
    };
    PhasePair::new(theta, phi)
}

fn apply_right_adjoint(u: &mut ComplexMatrix, m: usize, t: &Transfer2) {
    let t = t.0;
    for r in 0..u.rows() {
        let (a, b) = (u[(r, m)], u[(r, m + 1)]);
        u[(r, m)] = a * t[0][0].conj() + b * t[0][1].conj();
        u[(r, m + 1)] = a * t[1][0].conj() + b * t[1][1].conj();
    }
}

fn apply_left(u: &mut ComplexMatrix, m: usize, t: &Transfer2) {
    let t = t.0;
    for c in 0..u.cols() {
        let (a, b) = (u[(m, c)], u[(m + 1, c)]);
        u[(m, c)] = t[0][0] * a + t[0][1] * b;
        u[(m + 1, c)] = t[1][0] * a + t[1][1] * b;
    }
}

pub fn clements_decompose(u: &ComplexMatrix, role: Role) -> Result<MeshDecomposition> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let residual = unitarity_residual(u);
    if !(residual < UNITARY_TOL) {
        return Err(Error::NotUnitary { residual });
    }
    let n = u.rows();
    let mut work = u.clone();
    let mut right: Vec<(usize, PhasePair)> = Vec::new();
    let mut left: Vec<(usize, PhasePair)> = Vec::new();

    for i in 0..n.saturating_sub(1) {
        if i % 2 == 0 {
            for j in 0..=i {
                let (r, m) = (n - 1 - j, i - j);
                let ph = right_null(work[(r, m)], work[(r, m + 1)]);
                apply_right_adjoint(&mut work, m, &ideal(ph));
                right.push((m, ph));
            }
        } else {
            for j in 1..=i + 1 {
                let (m, c) = (n + j - i - 3, j - 1);
                let ph = left_null(work[(m, c)], work[(m + 1, c)]);
                apply_left(&mut work, m, &ideal(ph));
                left.push((m, ph));
            }
        }
    }

    // Commute T^H · D = D' · T(θ, φ') for the left-side MZIs, innermost first.
    let mut diag: Vec<C64> = (0..n).map(|k| work[(k, k)]).collect();
    let mut commuted = Vec::with_capacity(left.len());
    for &(m, ph) in left.iter().rev() {
        let (d1, d2) = (diag[m], diag[m + 1]);
        let rot = C64::from_polar(1.0, -ph.theta);
        diag[m] = -rot * C64::from_polar(1.0, -ph.phi) * d2;
        diag[m + 1] = -rot * d2;
        commuted.push((m, PhasePair::new(ph.theta, wrap_2pi(d1.arg() - d2.arg()))));
    }

    // Propagation order: right-side MZIs as found, then the commuted left
    // MZIs from outermost-applied to innermost.
    let order: Vec<(usize, PhasePair)> = right.into_iter().chain(commuted).collect();
    let placements = assign_columns(&order, n, role, 0);
    let phase_screen = diag.iter().map(|d| wrap_2pi(d.arg())).collect();
    Ok(MeshDecomposition {
        n,
        placements,
        phase_screen,
    })
}

/// Earliest column with the rectangular-grid parity `column ≡ top_row (mod 2)`.
pub(crate) fn assign_columns(order: &[(usize, PhasePair)], n: usize, role: Role, offset: usize) -> Vec<MziPlacement> {
    let mut next_free = vec![0usize; n];
    let mut out: Vec<MziPlacement> = order
        .iter()
        .map(|&(m, ph)| {
            let mut col = next_free[m].max(next_free[m + 1]);
            if col % 2 != m % 2 {
                col += 1;
            }
            next_free[m] = col + 1;
            next_free[m + 1] = col + 1;
            MziPlacement {
                column: col + offset,
                top_row: m,
                phases: ph,
                role,
            }
        })
        .collect();
    out.sort_by_key(|p| (p.column, p.top_row));
    out
}

/// Lossless transfer matrix of a placement list followed by a phase screen.
pub fn clements_reconstruct(placements: &[MziPlacement], n: usize, phase_screen: &[f64]) -> Result<ComplexMatrix> {
    if phase_screen.len() != n && !phase_screen.is_empty() {
        return Err(Error::dims(n, phase_screen.len()));
    }
    let columns = group_columns(placements, n)?;
    let mut m = ComplexMatrix::identity(n);
    let lossless = MziParams::lossless();
    for col in columns {
        for p in col {
            let t = mzi_transfer(&lossless, p.phases);
            if p.role == Role::Diagonal {
                let k = t.0[0][0];
                for c in 0..n {
                    m[(p.top_row, c)] *= k;
                }
            } else {
                apply_left(&mut m, p.top_row, &t);
            }
        }
    }
    for (r, phase) in phase_screen.iter().enumerate() {
        let d = C64::from_polar(1.0, *phase);
        for c in 0..n {
            m[(r, c)] *= d;
        }
    }
    Ok(m)
}

/// Groups placements by column in ascending order, rejecting overlaps and
/// out-of-range rows.
pub fn group_columns(placements: &[MziPlacement], n: usize) -> Result<Vec<Vec<&MziPlacement>>> {
    let mut sorted: Vec<&MziPlacement> = placements.iter().collect();
    sorted.sort_by_key(|p| (p.column, p.top_row));
    let mut columns: Vec<Vec<&MziPlacement>> = Vec::new();
    let mut current: Option<usize> = None;
    let mut used = vec![false; n];
    for p in sorted {
        let span = p.span();
        if p.top_row + span > n {
            return Err(Error::invalid(
                "placement",
                format!("rows {}..{} exceed {} ports", p.top_row, p.top_row + span, n),
            ));
        }
        if current != Some(p.column) {
            current = Some(p.column);
            used.iter_mut().for_each(|u| *u = false);
            columns.push(Vec::new());
        }
        for row in p.top_row..p.top_row + span {
            if used[row] {
                return Err(Error::OverlappingPlacement { column: p.column, row });
            }
            used[row] = true;
        }
        columns.last_mut().expect("column pushed").push(p);
    }
    Ok(columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_unitary, Rng};

    /// Distance between matrices modulo a global phase.
    fn phase_free_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        let (mut best, mut idx) = (0.0, (0, 0));
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                if b[(r, c)].norm() > best {
                    best = b[(r, c)].norm();
                    idx = (r, c);
                }
            }
        }
        let g = a[idx] / b[idx];
        a.max_abs_diff(&b.scale(g / g.norm()))
    }

    #[test]
    fn two_port_identity() {
        let d = clements_decompose(&ComplexMatrix::identity(2), Role::UnitaryU).unwrap();
        assert_eq!(d.placements.len(), 1);
        let r = clements_reconstruct(&d.placements, 2, &d.phase_screen).unwrap();
        assert!(phase_free_diff(&r, &ComplexMatrix::identity(2)) < 1e-12);
        assert!((d.placements[0].phases.theta - PI).abs() < 1e-12);
    }

    #[test]
    fn empty_list_is_identity() {
        let r = clements_reconstruct(&[], 3, &[0.0; 3]).unwrap();
        assert_eq!(r, ComplexMatrix::identity(3));
    }

    #[test]
    fn single_cross_swaps_two_rows() {
        let p = MziPlacement {
            column: 0,
            top_row: 0,
            phases: PhasePair::cross(),
            role: Role::UnitaryU,
        };
        let r = clements_reconstruct(&[p], 3, &[]).unwrap();
        assert!((r[(0, 1)].norm() - 1.0).abs() < 1e-12);
        assert!((r[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(r[(0, 0)].norm() < 1e-12 && r[(1, 1)].norm() < 1e-12);
        assert_eq!(r[(2, 2)], C64::new(1.0, 0.0));
    }

    #[test]
    fn overlapping_rejected() {
        let p = MziPlacement {
            column: 0,
            top_row: 0,
            phases: PhasePair::bar(),
            role: Role::UnitaryU,
        };
        let q = MziPlacement { top_row: 1, ..p };
        assert!(matches!(
            clements_reconstruct(&[p, q], 3, &[]),
            Err(Error::OverlappingPlacement { column: 0, row: 1 })
        ));
    }

    #[test]
    fn non_unitary_rejected() {
        let m = ComplexMatrix::identity(4).scale(C64::new(0.5, 0.0));
        assert!(matches!(
            clements_decompose(&m, Role::UnitaryU),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn random_unitaries_round_trip_on_n_columns() {
        let mut rng = Rng::new(21);
        for n in [2, 3, 4, 5, 8, 9] {
            for _ in 0..5 {
                let u = random_unitary(n, &mut rng);
                let d = clements_decompose(&u, Role::UnitaryV).unwrap();
                assert_eq!(d.placements.len(), n * (n - 1) / 2);
                let depth = d.placements.iter().map(|p| p.column).max().unwrap() + 1;
                assert!(depth <= n, "n={n} depth={depth}");
                for p in &d.placements {
                    assert!((0.0..=PI).contains(&p.phases.theta));
                    assert!((0.0..2.0 * PI).contains(&p.phases.phi));
                }
                let r = clements_reconstruct(&d.placements, n, &d.phase_screen).unwrap();
                assert!(r.max_abs_diff(&u) < 1e-10, "n={n}");
            }
        }
    }
}

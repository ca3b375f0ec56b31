//! Weight-matrix compilation: SVD split, Clements meshes for the unitary
//! factors and single-port MZI attenuators for the singular values.
//!
//! Within a compiled layer light flows through the `V^H` mesh (columns
//! `0..n`), the Σ attenuator column (`n`), the `U` mesh (columns
//! `n+1..=2n`) and finally a lossless output phase screen. The `V^H` phase
//! screen is commuted through Σ and absorbed into the `U` decomposition, so
//! one screen per layer remains.

mod clements;
mod layout_doc;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use clements::{clements_decompose, clements_reconstruct, group_columns, MeshDecomposition, UNITARY_TOL};
pub use layout_doc::LayoutDocument;

use crate::device::PhasePair;
use crate::error::{Error, Result};
use crate::numerics::{svd, ComplexMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    UnitaryU,
    UnitaryV,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MziPlacement {
    pub column: usize,
    pub top_row: usize,
    pub phases: PhasePair,
    pub role: Role,
}

impl MziPlacement {
    /// Number of waveguides the placement touches.
    pub fn span(&self) -> usize {
        match self.role {
            Role::Diagonal => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaStage {
    /// One attenuator per port, in port order.
    pub attenuators: Vec<MziPlacement>,
    /// Largest singular value; the stage realizes `s / s_max`.
    pub s_max: f64,
}

impl SigmaStage {
    /// Gain (dB) needed to restore the `1/s_max` normalization.
    pub fn deficit_db(&self) -> f64 {
        20.0 * self.s_max.log10()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerLayout {
    pub n: usize,
    pub v_mesh: Vec<MziPlacement>,
    pub sigma_stage: SigmaStage,
    pub u_mesh: Vec<MziPlacement>,
    /// Output phases (radians) after the `U` mesh.
    pub phase_screen: Vec<f64>,
    pub gain_db: f64,
    pub nau_loss_db: f64,
}

impl LayerLayout {
    /// All placements in propagation order (sorted by column, then row).
    pub fn placements(&self) -> impl Iterator<Item = &MziPlacement> {
        self.v_mesh
            .iter()
            .chain(&self.sigma_stage.attenuators)
            .chain(&self.u_mesh)
    }

    pub fn mzi_count(&self) -> usize {
        self.v_mesh.len() + self.sigma_stage.attenuators.len() + self.u_mesh.len()
    }

    pub fn depth(&self) -> usize {
        self.placements().map(|p| p.column + 1).max().unwrap_or(0)
    }

    pub fn s_max(&self) -> f64 {
        self.sigma_stage.s_max
    }

    /// Lossless end-to-end transfer (`w / s_max` for a compiled `w`).
    pub fn ideal_transfer(&self) -> Result<ComplexMatrix> {
        let all: Vec<MziPlacement> = self.placements().copied().collect();
        clements_reconstruct(&all, self.n, &self.phase_screen)
    }
}

/// Σ stage: one single-pass MZI per port (I1 -> O1, other ports
/// terminated) with through amplitude `s_k / s_max` and zero phase in the
/// lossless reference.
pub fn diagonal_to_attenuators(s: &[f64], column: usize) -> Result<SigmaStage> {
    if s.is_empty() {
        return Err(Error::Empty("singular values"));
    }
    if let Some(v) = s.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("s", format!("values must be finite and >= 0, got {v}")));
    }
    let s_max = s.iter().copied().fold(0.0, f64::max);
    if s_max == 0.0 {
        return Err(Error::Degenerate("all-zero diagonal".into()));
    }
    let attenuators = s
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let ratio = (v / s_max).clamp(0.0, 1.0);
            let theta = 2.0 * ratio.asin();
            // T11 = j e^{jθ/2} e^{jφ} sin(θ/2) is made real and positive.
            let phi = (-PI / 2.0 - theta / 2.0).rem_euclid(2.0 * PI);
            MziPlacement {
                column,
                top_row: k,
                phases: PhasePair::new(theta, phi),
                role: Role::Diagonal,
            }
        })
        .collect();
    Ok(SigmaStage { attenuators, s_max })
}

pub fn compile_layer(w: &ComplexMatrix, gain_db: f64, nau_loss_db: f64) -> Result<LayerLayout> {
    if !w.is_square() {
        return Err(Error::NotSquare {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    let n = w.rows();
    let d = svd(w)?;
    let v_dec = clements_decompose(&d.vh, Role::UnitaryV)?;
    // W = U Σ D_v M_v = (U D_v) Σ M_v since diagonals commute.
    let u_prime = ComplexMatrix::from_fn(n, n, |r, c| d.u[(r, c)] * C64::from_polar(1.0, v_dec.phase_screen[c]));
    let u_dec = clements_decompose(&u_prime, Role::UnitaryU)?;
    let sigma_stage = diagonal_to_attenuators(&d.s, n)?;
    let u_mesh = u_dec
        .placements
        .into_iter()
        .map(|p| MziPlacement {
            column: p.column + n + 1,
            ..p
        })
        .collect();
    Ok(LayerLayout {
        n,
        v_mesh: v_dec.placements,
        sigma_stage,
        u_mesh,
        phase_screen: u_dec.phase_screen,
        gain_db,
        nau_loss_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{mzi_transfer, MziParams};
    use crate::numerics::{random_gaussian_matrix, Rng};

    #[test]
    fn unit_diagonal_is_fully_transmissive() {
        let st = diagonal_to_attenuators(&[1.0; 4], 0).unwrap();
        assert_eq!(st.s_max, 1.0);
        for a in &st.attenuators {
            assert!((a.phases.theta - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_normalization() {
        let st = diagonal_to_attenuators(&[2.0, 1.0], 0).unwrap();
        assert_eq!(st.s_max, 2.0);
        let t = mzi_transfer(&MziParams::lossless(), st.attenuators[1].phases).0;
        assert!((t[0][0].norm_sqr() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn diagonal_amplitudes_real_positive() {
        let mut rng = Rng::new(5);
        let s: Vec<f64> = (0..9).map(|_| rng.uniform01() * 3.0).collect();
        let st = diagonal_to_attenuators(&s, 0).unwrap();
        for (a, v) in st.attenuators.iter().zip(&s) {
            let t = mzi_transfer(&MziParams::lossless(), a.phases).0[0][0];
            assert!((t - C64::new(v / st.s_max, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_diagonal_rejected() {
        assert!(matches!(
            diagonal_to_attenuators(&[0.0, 0.0], 0),
            Err(Error::Degenerate(_))
        ));
        assert!(diagonal_to_attenuators(&[-1.0], 0).is_err());
    }

    #[test]
    fn identity_layer() {
        let l = compile_layer(&ComplexMatrix::identity(4), 17.0, 1.0).unwrap();
        assert_eq!(l.s_max(), 1.0);
        let t = l.ideal_transfer().unwrap();
        let g = t[(0, 0)];
        assert!((g.norm() - 1.0).abs() < 1e-10);
        assert!(t.max_abs_diff(&ComplexMatrix::identity(4).scale(g)) < 1e-10);
    }

    #[test]
    fn layer_counts_and_depth() {
        let mut rng = Rng::new(6);
        for n in [2, 4, 7, 16] {
            let w = random_gaussian_matrix(n, &mut rng);
            let l = compile_layer(&w, 0.0, 0.0).unwrap();
            assert_eq!(l.v_mesh.len(), n * (n - 1) / 2);
            assert_eq!(l.u_mesh.len(), n * (n - 1) / 2);
            assert_eq!(l.sigma_stage.attenuators.len(), n);
            assert_eq!(l.mzi_count(), n * (n - 1) + n);
            assert!(l.depth() <= 2 * n + 1);
            if n > 2 {
                assert_eq!(l.depth(), 2 * n + 1);
            }
            let t = l.ideal_transfer().unwrap();
            assert!(t.max_abs_diff(&w.scale(C64::new(1.0 / l.s_max(), 0.0))) < 1e-9);
        }
    }
}

//! JSON export/import of compiled layers.
//!
//! ```json
//! {"n": 4, "columns": [{"placements": [{"rows": [0, 1], "theta": 1.2, "phi": 0.3, "role": "unitary_v"}]}],
//!  "phase_screen": [...], "s_max": 2.1, "gain_db": 17.0, "nau_loss_db": 1.0}
//! ```
//!
//! Floats are written in shortest round-trip form, so import(export(l)) == l.

use serde::{Deserialize, Serialize};

use super::{group_columns, LayerLayout, MziPlacement, Role, SigmaStage};
use crate::device::PhasePair;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub n: usize,
    pub columns: Vec<ColumnDoc>,
    pub phase_screen: Vec<f64>,
    pub s_max: f64,
    pub gain_db: f64,
    pub nau_loss_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnDoc {
    pub placements: Vec<PlacementDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub rows: Vec<usize>,
    pub theta: f64,
    pub phi: f64,
    pub role: Role,
}

impl LayoutDocument {
    pub fn from_layout(layout: &LayerLayout) -> Self {
        let depth = layout.depth();
        let mut columns = vec![ColumnDoc { placements: vec![] }; depth];
        for p in layout.placements() {
            columns[p.column].placements.push(PlacementDoc {
                rows: (p.top_row..p.top_row + p.span()).collect(),
                theta: p.phases.theta,
                phi: p.phases.phi,
                role: p.role,
            });
        }
        Self {
            n: layout.n,
            columns,
            phase_screen: layout.phase_screen.clone(),
            s_max: layout.sigma_stage.s_max,
            gain_db: layout.gain_db,
            nau_loss_db: layout.nau_loss_db,
        }
    }

    pub fn into_layout(self) -> Result<LayerLayout> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Format {
                what: "layout",
                reason: "n must be positive".into(),
            });
        }
        if self.phase_screen.len() != n {
            return Err(Error::Format {
                what: "layout",
                reason: format!("phase_screen has {} entries, expected {n}", self.phase_screen.len()),
            });
        }
        if !(self.s_max > 0.0) || !self.s_max.is_finite() {
            return Err(Error::Format {
                what: "layout",
                reason: format!("s_max must be positive, got {}", self.s_max),
            });
        }
        let mut v_mesh = Vec::new();
        let mut u_mesh = Vec::new();
        let mut attenuators = Vec::new();
        for (column, col) in self.columns.iter().enumerate() {
            for p in &col.placements {
                let span = if p.role == Role::Diagonal { 1 } else { 2 };
                let contiguous = p.rows.len() == span && p.rows.windows(2).all(|w| w[1] == w[0] + 1);
                if !contiguous {
                    return Err(Error::Format {
                        what: "layout",
                        reason: format!("column {column}: rows {:?} invalid for {:?}", p.rows, p.role),
                    });
                }
                let phases = PhasePair::new(p.theta, p.phi);
                phases.validate()?;
                let placement = MziPlacement {
                    column,
                    top_row: p.rows[0],
                    phases,
                    role: p.role,
                };
                match p.role {
                    Role::UnitaryV => v_mesh.push(placement),
                    Role::UnitaryU => u_mesh.push(placement),
                    Role::Diagonal => attenuators.push(placement),
                }
            }
        }
        let layout = LayerLayout {
            n,
            v_mesh,
            sigma_stage: SigmaStage {
                attenuators,
                s_max: self.s_max,
            },
            u_mesh,
            phase_screen: self.phase_screen,
            gain_db: self.gain_db,
            nau_loss_db: self.nau_loss_db,
        };
        let all: Vec<MziPlacement> = layout.placements().copied().collect();
        group_columns(&all, n)?;
        Ok(layout)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::compile_layer;
    use crate::numerics::{random_gaussian_matrix, Rng};

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = Rng::new(8);
        let w = random_gaussian_matrix(6, &mut rng);
        let layout = compile_layer(&w, 17.0, 1.0).unwrap();
        let text = LayoutDocument::from_layout(&layout).to_json().unwrap();
        let back = LayoutDocument::from_json(&text).unwrap().into_layout().unwrap();
        assert_eq!(back, layout);
    }

    #[test]
    fn malformed_documents_rejected() {
        let bad_rows = r#"{"n":2,"columns":[{"placements":[{"rows":[0,2],"theta":1.0,"phi":0.0,"role":"unitary_u"}]}],
            "phase_screen":[0,0],"s_max":1,"gain_db":0,"nau_loss_db":0}"#;
        assert!(LayoutDocument::from_json(bad_rows).unwrap().into_layout().is_err());
        let unknown = r#"{"n":2,"columns":[],"phase_screen":[0,0],"s_max":1,"gain_db":0,"nau_loss_db":0,"extra":1}"#;
        assert!(LayoutDocument::from_json(unknown).is_err());
        let overlap = r#"{"n":3,"columns":[{"placements":[
            {"rows":[0,1],"theta":1.0,"phi":0.0,"role":"unitary_u"},
            {"rows":[1,2],"theta":1.0,"phi":0.0,"role":"unitary_u"}]}],
            "phase_screen":[0,0,0],"s_max":1,"gain_db":0,"nau_loss_db":0}"#;
        assert!(LayoutDocument::from_json(overlap).unwrap().into_layout().is_err());
    }
}

//! Quantities recorded per run and their flat layout for projection.

use std::collections::BTreeMap;

use fracsim_core::stepper::SimState;
use fracsim_core::MixedMesh;
use serde::{Deserialize, Serialize};

/// Matrix quantities, one value per triangle.
pub const MATRIX_FIELDS: [&str; 7] = [
    "pressure",
    "temperature",
    "solute",
    "precipitate",
    "porosity",
    "porosity_solute",
    "porosity_precipitate",
];

/// Fracture quantities, one value per fracture cell.
pub const FRACTURE_FIELDS: [&str; 5] = [
    "pressure",
    "temperature",
    "aperture_solute",
    "aperture_precipitate",
    "aperture",
];

/// Snapshot labels of an ensemble run: the first state at or after a tenth
/// of the final time, and the final state.
pub const SNAPSHOTS: [&str; 2] = ["early", "final"];

/// Fields of one snapshot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackedFields {
    pub time: f64,
    pub matrix: BTreeMap<String, Vec<f64>>,
    pub fracture: BTreeMap<String, Vec<f64>>,
}

impl TrackedFields {
    pub fn from_state(state: &SimState) -> Self {
        let c = &state.chem;
        let product = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<f64>>();
        let matrix = [
            ("pressure", state.flow.pressure.clone()),
            ("temperature", state.temperature.matrix.clone()),
            ("solute", c.solute.matrix.clone()),
            ("precipitate", c.matrix_precipitate.clone()),
            ("porosity", c.porosity.clone()),
            ("porosity_solute", product(&c.porosity, &c.solute.matrix)),
            ("porosity_precipitate", product(&c.porosity, &c.matrix_precipitate)),
        ];
        let fracture = [
            ("pressure", state.flow.fracture_pressure.clone()),
            ("temperature", state.temperature.fracture.clone()),
            ("aperture_solute", product(&c.aperture, &c.solute.fracture)),
            ("aperture_precipitate", product(&c.aperture, &c.fracture_precipitate)),
            ("aperture", c.aperture.clone()),
        ];
        TrackedFields {
            time: state.time,
            matrix: matrix.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            fracture: fracture.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

/// Everything one ensemble node contributes, keyed by snapshot label.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeOutputs {
    pub snapshots: BTreeMap<String, TrackedFields>,
}

/// Position of one named field inside the flattened output vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSlot {
    pub snapshot: String,
    pub domain: Domain,
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Matrix,
    Fracture,
}

impl FieldSlot {
    pub fn key(&self) -> String {
        let d = match self.domain {
            Domain::Matrix => "matrix",
            Domain::Fracture => "fracture",
        };
        format!("{}.{d}.{}", self.snapshot, self.name)
    }
}

impl NodeOutputs {
    /// Layout of [`NodeOutputs::flatten`], in a fixed order.
    pub fn layout(&self) -> Vec<FieldSlot> {
        let mut slots = Vec::new();
        let mut offset = 0;
        for (label, snap) in &self.snapshots {
            for (domain, fields) in [(Domain::Matrix, &snap.matrix), (Domain::Fracture, &snap.fracture)] {
                for (name, values) in fields {
                    slots.push(FieldSlot {
                        snapshot: label.clone(),
                        domain,
                        name: name.clone(),
                        offset,
                        len: values.len(),
                    });
                    offset += values.len();
                }
            }
        }
        slots
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for snap in self.snapshots.values() {
            for fields in [&snap.matrix, &snap.fracture] {
                for values in fields.values() {
                    out.extend_from_slice(values);
                }
            }
        }
        out
    }
}

/// Arclength of each fracture cell midpoint along its fracture, and the
/// fracture length.
#[derive(Clone, Debug, PartialEq)]
pub struct FractureProfile {
    /// `(fracture, cell, arclength)` in polyline order.
    pub cells: Vec<(usize, usize, f64)>,
    pub lengths: Vec<f64>,
}

impl FractureProfile {
    pub fn new(mesh: &MixedMesh) -> Self {
        let mut cells = Vec::new();
        let mut lengths = Vec::new();
        for (f, fracture) in mesh.fractures.iter().enumerate() {
            let mut s = 0.0;
            for &c in &fracture.cells {
                let [a, b] = mesh.fracture_cells[c].vertices.map(|v| mesh.vertices[v]);
                let l = (b[0] - a[0]).hypot(b[1] - a[1]);
                cells.push((f, c, s + 0.5 * l));
                s += l;
            }
            lengths.push(s);
        }
        FractureProfile { cells, lengths }
    }

    /// Cell of `fracture` containing the point at `fraction` of its length.
    pub fn cell_at(&self, fracture: usize, fraction: f64) -> Option<usize> {
        let target = fraction * *self.lengths.get(fracture)?;
        self.cells
            .iter()
            .filter(|(f, _, _)| *f == fracture)
            .min_by(|a, b| (a.2 - target).abs().total_cmp(&(b.2 - target).abs()))
            .map(|&(_, c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracsim_core::mesh::build_unit_square_with_fractures;

    #[test]
    fn layout_matches_flatten() {
        let mut n = NodeOutputs::default();
        for (label, t) in [("early", 0.1), ("final", 1.0)] {
            let mut s = TrackedFields {
                time: t,
                ..Default::default()
            };
            s.matrix.insert("a".into(), vec![1.0, 2.0]);
            s.fracture.insert("b".into(), vec![3.0]);
            n.snapshots.insert(label.into(), s);
        }
        let flat = n.flatten();
        let layout = n.layout();
        assert_eq!(flat.len(), 6);
        assert_eq!(layout[1].key(), "early.fracture.b");
        assert_eq!(flat[layout[1].offset], 3.0);
        assert_eq!(layout[2].offset, 3);
    }

    #[test]
    fn arclength_along_the_single_fracture() {
        let mesh = build_unit_square_with_fractures(&[[[0.1, 0.0], [0.9, 0.8]]], 0.1).unwrap();
        let p = FractureProfile::new(&mesh);
        assert!((p.lengths[0] - 0.8 * 2f64.sqrt()).abs() < 1e-12);
        assert!(p.cells.windows(2).all(|w| w[1].2 > w[0].2));
        let quarter = p.cell_at(0, 0.25).unwrap();
        let s = p.cells.iter().find(|c| c.1 == quarter).unwrap().2;
        assert!((s / p.lengths[0] - 0.25).abs() < 0.1);
    }
}

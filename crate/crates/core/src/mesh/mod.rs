//! Conforming mixed-dimensional mesh: triangles in the matrix, segments on the
//! fractures and points at fracture intersections.
//!
//! Every fracture segment coincides with a triangle edge. That edge is stored
//! twice as a matrix face, once per side of the fracture, so the two pressure
//! traces on either side are distinct unknowns.

mod build;
mod geometry;
mod io;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::MeshError;

pub use build::build_unit_square_with_fractures;
pub use geometry::GeometryCache;
pub use io::{load_mesh, parse_mesh, write_mesh, write_mesh_string};

pub type Point = [f64; 2];

/// Side of a fracture. `Plus` is the side the fracture normal points to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FaceKind {
    /// Interior face between `left` and `right` triangles.
    Interior { right: usize },
    /// Outer boundary face carrying a tag id (see [`MixedMesh::tags`]).
    Boundary { tag: usize },
    /// One side of a fracture cell. The only incident triangle is `left`.
    Fracture { cell: usize, side: Side },
}

/// A matrix face. The unit normal points from `left` to the right, i.e. to the
/// right of the directed segment `vertices[0] -> vertices[1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixFace {
    pub vertices: [usize; 2],
    pub left: usize,
    pub kind: FaceKind,
}

/// A fracture segment. The fracture normal of the cell is the tangent
/// `vertices[0] -> vertices[1]` rotated counter-clockwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractureCell {
    pub vertices: [usize; 2],
    pub fracture: usize,
    pub plus_face: usize,
    pub minus_face: usize,
    /// Fracture faces attached to `vertices[0]` and `vertices[1]`.
    pub ends: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FractureFaceKind {
    /// Between two consecutive cells of a fracture; positive flux goes from
    /// `cells[0]` to `cells[1]`.
    Internal { cells: [usize; 2] },
    /// Cell end touching an intersection point; positive flux goes into the point.
    Intersection { cell: usize, point: usize },
    /// Free end of a fracture. `tag` is set when the tip lies on the outer
    /// boundary. Positive flux leaves the cell.
    Tip { cell: usize, tag: Option<usize> },
}

/// Zero-dimensional face of the fracture grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractureFace {
    pub vertex: usize,
    pub kind: FractureFaceKind,
}

impl FractureFace {
    /// Sign of the face flux seen as an outflow of `cell`, or `None` if the face
    /// does not touch `cell`.
    pub fn outward_sign(&self, cell: usize) -> Option<f64> {
        match self.kind {
            FractureFaceKind::Internal { cells } if cells[0] == cell => Some(1.0),
            FractureFaceKind::Internal { cells } if cells[1] == cell => Some(-1.0),
            FractureFaceKind::Intersection { cell: c, .. } | FractureFaceKind::Tip { cell: c, .. } if c == cell => {
                Some(1.0)
            }
            _ => None,
        }
    }
}

/// An ordered fracture polyline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fracture {
    pub vertices: Vec<usize>,
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionPoint {
    pub vertex: usize,
    /// Incident fracture cells.
    pub cells: Vec<usize>,
    /// The fracture faces joining those cells to this point.
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MixedMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<MatrixFace>,
    /// Face ids of each triangle; entry `i` is the edge `(v_i, v_{i+1})`.
    pub triangle_faces: Vec<[usize; 3]>,
    pub fracture_cells: Vec<FractureCell>,
    pub fracture_faces: Vec<FractureFace>,
    pub fractures: Vec<Fracture>,
    pub intersections: Vec<IntersectionPoint>,
    /// Boundary tag names, indexed by [`FaceKind::Boundary::tag`].
    pub tags: Vec<String>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl MixedMesh {
    /// Assembles the full mixed-dimensional topology from a triangulation, a
    /// list of tagged boundary edges and fracture polylines (vertex ids).
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_tags: &[([usize; 2], String)],
        fracture_polylines: &[Vec<usize>],
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(MeshError::invariant("vertex", i, "non-finite coordinate"));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::invariant("triangle", t, "vertex id out of range"));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::invariant(
                    "triangle",
                    t,
                    format!("non-positive area {area:e} (vertices must be counter-clockwise)"),
                ));
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::InvalidInput("mesh has no triangles".into()));
        }

        // Undirected edge -> incident (triangle, local edge) in first-seen order.
        let mut edge_order: Vec<(usize, usize)> = Vec::new();
        let mut incidences: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let key = edge_key(tri[i], tri[(i + 1) % 3]);
                let entry = incidences.entry(key).or_default();
                if entry.is_empty() {
                    edge_order.push(key);
                }
                entry.push((t, i));
                if entry.len() > 2 {
                    return Err(MeshError::invariant(
                        "triangle",
                        t,
                        format!("edge ({}, {}) shared by more than two triangles", key.0, key.1),
                    ));
                }
            }
        }

        let mut tag_names: Vec<String> = Vec::new();
        let mut tag_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, (e, name)) in boundary_tags.iter().enumerate() {
            if e[0] >= nv || e[1] >= nv {
                return Err(MeshError::invariant("boundary face", i, "vertex id out of range"));
            }
            let key = edge_key(e[0], e[1]);
            match incidences.get(&key) {
                Some(inc) if inc.len() == 1 => {}
                _ => {
                    return Err(MeshError::invariant(
                        "boundary face",
                        i,
                        "tagged edge is not a boundary edge of the triangulation",
                    ))
                }
            }
            let tag = match tag_names.iter().position(|n| n == name) {
                Some(p) => p,
                None => {
                    tag_names.push(name.clone());
                    tag_names.len() - 1
                }
            };
            tag_of_edge.insert(key, tag);
        }

        // Fracture cells in polyline order.
        let mut fracture_cells: Vec<FractureCell> = Vec::new();
        let mut fractures: Vec<Fracture> = Vec::new();
        let mut cell_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, poly) in fracture_polylines.iter().enumerate() {
            if poly.len() < 2 {
                return Err(MeshError::invariant("fracture", f, "needs at least two vertices"));
            }
            let mut cells = Vec::with_capacity(poly.len() - 1);
            for w in poly.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a >= nv || b >= nv {
                    return Err(MeshError::invariant("fracture", f, "vertex id out of range"));
                }
                if a == b {
                    return Err(MeshError::invariant("fracture", f, "zero-length segment"));
                }
                let key = edge_key(a, b);
                match incidences.get(&key) {
                    Some(inc) if inc.len() == 2 => {}
                    Some(_) => {
                        return Err(MeshError::invariant(
                            "fracture",
                            f,
                            format!("segment ({a}, {b}) lies on the outer boundary"),
                        ))
                    }
                    None => {
                        return Err(MeshError::invariant(
                            "fracture",
                            f,
                            format!("segment ({a}, {b}) is not a triangle edge"),
                        ))
                    }
                }
                let c = fracture_cells.len();
                if cell_of_edge.insert(key, c).is_some() {
                    return Err(MeshError::invariant(
                        "fracture",
                        f,
                        format!("segment ({a}, {b}) used by more than one fracture cell"),
                    ));
                }
                fracture_cells.push(FractureCell {
                    vertices: [a, b],
                    fracture: f,
                    plus_face: usize::MAX,
                    minus_face: usize::MAX,
                    ends: [usize::MAX; 2],
                });
                cells.push(c);
            }
            fractures.push(Fracture {
                vertices: poly.clone(),
                cells,
            });
        }

        // Matrix faces.
        let mut faces: Vec<MatrixFace> = Vec::new();
        let mut triangle_faces = vec![[usize::MAX; 3]; triangles.len()];
        for key in &edge_order {
            let inc = &incidences[key];
            let directed = |(t, i): (usize, usize)| {
                let tri = triangles[t];
                [tri[i], tri[(i + 1) % 3]]
            };
            if let Some(&c) = cell_of_edge.get(key) {
                let cell_dir = fracture_cells[c].vertices;
                for &(t, i) in inc {
                    let d = directed((t, i));
                    // The triangle holding the directed edge a->b lies to its left,
                    // which is where the counter-clockwise normal points.
                    let side = if d == cell_dir { Side::Plus } else { Side::Minus };
                    let id = faces.len();
                    faces.push(MatrixFace {
                        vertices: d,
                        left: t,
                        kind: FaceKind::Fracture { cell: c, side },
                    });
                    triangle_faces[t][i] = id;
                    match side {
                        Side::Plus => fracture_cells[c].plus_face = id,
                        Side::Minus => fracture_cells[c].minus_face = id,
                    }
                }
                if fracture_cells[c].plus_face == usize::MAX || fracture_cells[c].minus_face == usize::MAX {
                    return Err(MeshError::invariant(
                        "fracture cell",
                        c,
                        "inconsistent triangle orientation on the two sides",
                    ));
                }
            } else if inc.len() == 2 {
                let id = faces.len();
                faces.push(MatrixFace {
                    vertices: directed(inc[0]),
                    left: inc[0].0,
                    kind: FaceKind::Interior { right: inc[1].0 },
                });
                triangle_faces[inc[0].0][inc[0].1] = id;
                triangle_faces[inc[1].0][inc[1].1] = id;
            } else {
                let Some(&tag) = tag_of_edge.get(key) else {
                    return Err(MeshError::invariant(
                        "boundary face",
                        faces.len(),
                        format!("edge ({}, {}) has no boundary tag", key.0, key.1),
                    ));
                };
                let id = faces.len();
                faces.push(MatrixFace {
                    vertices: directed(inc[0]),
                    left: inc[0].0,
                    kind: FaceKind::Boundary { tag },
                });
                triangle_faces[inc[0].0][inc[0].1] = id;
            }
        }

        // Intersections: vertices shared by two or more fractures.
        let mut fractures_at_vertex: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (f, fr) in fractures.iter().enumerate() {
            for &v in &fr.vertices {
                let list = fractures_at_vertex.entry(v).or_default();
                if !list.contains(&f) {
                    list.push(f);
                }
            }
        }
        let mut point_of_vertex: HashMap<usize, usize> = HashMap::new();
        let mut intersections: Vec<IntersectionPoint> = Vec::new();
        for (&v, frs) in &fractures_at_vertex {
            if frs.len() >= 2 {
                point_of_vertex.insert(v, intersections.len());
                intersections.push(IntersectionPoint {
                    vertex: v,
                    cells: Vec::new(),
                    faces: Vec::new(),
                });
            }
        }

        let mut boundary_tag_at_vertex: HashMap<usize, usize> = HashMap::new();
        for face in &faces {
            if let FaceKind::Boundary { tag } = face.kind {
                for &v in &face.vertices {
                    boundary_tag_at_vertex.entry(v).or_insert(tag);
                }
            }
        }

        let mut fracture_faces: Vec<FractureFace> = Vec::new();
        for fr in &fractures {
            let m = fr.cells.len();
            for (k, &v) in fr.vertices.iter().enumerate() {
                let before = if k > 0 { Some(fr.cells[k - 1]) } else { None };
                let after = if k < m { Some(fr.cells[k]) } else { None };
                if let Some(&p) = point_of_vertex.get(&v) {
                    for c in [before, after].into_iter().flatten() {
                        let id = fracture_faces.len();
                        fracture_faces.push(FractureFace {
                            vertex: v,
                            kind: FractureFaceKind::Intersection { cell: c, point: p },
                        });
                        intersections[p].cells.push(c);
                        intersections[p].faces.push(id);
                        let end = if fracture_cells[c].vertices[0] == v { 0 } else { 1 };
                        fracture_cells[c].ends[end] = id;
                    }
                    continue;
                }
                let id = fracture_faces.len();
                match (before, after) {
                    (Some(c0), Some(c1)) => {
                        fracture_faces.push(FractureFace {
                            vertex: v,
                            kind: FractureFaceKind::Internal { cells: [c0, c1] },
                        });
                        fracture_cells[c0].ends[1] = id;
                        fracture_cells[c1].ends[0] = id;
                    }
                    (Some(c), None) | (None, Some(c)) => {
                        fracture_faces.push(FractureFace {
                            vertex: v,
                            kind: FractureFaceKind::Tip {
                                cell: c,
                                tag: boundary_tag_at_vertex.get(&v).copied(),
                            },
                        });
                        let end = if fracture_cells[c].vertices[0] == v { 0 } else { 1 };
                        fracture_cells[c].ends[end] = id;
                    }
                    (None, None) => unreachable!("polyline vertex without cells"),
                }
            }
        }
        for (c, cell) in fracture_cells.iter().enumerate() {
            if cell.ends.contains(&usize::MAX) {
                return Err(MeshError::invariant(
                    "fracture cell",
                    c,
                    "fracture polyline is not a simple chain",
                ));
            }
        }

        Ok(MixedMesh {
            vertices,
            triangles,
            faces,
            triangle_faces,
            fracture_cells,
            fracture_faces,
            fractures,
            intersections,
            tags: tag_names,
        })
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_fracture_cells(&self) -> usize {
        self.fracture_cells.len()
    }

    pub fn num_intersections(&self) -> usize {
        self.intersections.len()
    }

    pub fn tag_id(&self, name: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == name)
    }

    /// Orientation of face `f` seen from triangle `t`: `+1` when the stored
    /// normal points out of `t`.
    pub fn face_sign(&self, t: usize, f: usize) -> f64 {
        if self.faces[f].left == t {
            1.0
        } else {
            -1.0
        }
    }

    /// Vertex of triangle `t` opposite its local edge `i`.
    pub fn opposite_vertex(&self, t: usize, i: usize) -> usize {
        self.triangles[t][(i + 2) % 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> (Vec<Point>, Vec<[usize; 3]>) {
        (
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    fn square_tags() -> Vec<([usize; 2], String)> {
        vec![
            ([0, 1], "bottom".into()),
            ([1, 2], "right".into()),
            ([2, 3], "top".into()),
            ([3, 0], "left".into()),
        ]
    }

    #[test]
    fn interior_face_between_two_triangles() {
        let (v, t) = two_triangles();
        let mesh = MixedMesh::from_parts(v, t, &square_tags(), &[]).unwrap();
        assert_eq!(mesh.num_faces(), 5);
        let interior: Vec<_> = mesh
            .faces
            .iter()
            .filter(|f| matches!(f.kind, FaceKind::Interior { .. }))
            .collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(mesh.tags, vec!["bottom", "right", "top", "left"]);
    }

    #[test]
    fn diagonal_fracture_duplicates_face() {
        let (v, t) = two_triangles();
        let mesh = MixedMesh::from_parts(v, t, &square_tags(), &[vec![0, 2]]).unwrap();
        assert_eq!(mesh.num_faces(), 6);
        let cell = &mesh.fracture_cells[0];
        let plus = &mesh.faces[cell.plus_face];
        let minus = &mesh.faces[cell.minus_face];
        assert_ne!(plus.left, minus.left);
        // Tangent (1,1): the plus side is above the diagonal, i.e. triangle 1.
        assert_eq!(plus.left, 1);
        assert_eq!(mesh.fracture_faces.len(), 2);
        for ff in &mesh.fracture_faces {
            assert!(matches!(ff.kind, FractureFaceKind::Tip { tag: Some(_), .. }));
        }
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let (v, _) = two_triangles();
        let err = MixedMesh::from_parts(v, vec![[0, 2, 1]], &[], &[]).unwrap_err();
        assert!(matches!(
            err,
            MeshError::Invariant {
                entity: "triangle",
                id: 0,
                ..
            }
        ));
    }

    #[test]
    fn untagged_boundary_rejected() {
        let (v, t) = two_triangles();
        let err = MixedMesh::from_parts(v, t, &square_tags()[..3], &[]).unwrap_err();
        assert!(matches!(
            err,
            MeshError::Invariant {
                entity: "boundary face",
                ..
            }
        ));
    }

    #[test]
    fn fracture_on_boundary_rejected() {
        let (v, t) = two_triangles();
        let err = MixedMesh::from_parts(v, t, &square_tags(), &[vec![0, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::Invariant { entity: "fracture", .. }));
    }
}

use super::{FaceKind, FractureFaceKind, MixedMesh, Point};

/// Geometric quantities derived once from a [`MixedMesh`].
#[derive(Clone, Debug)]
pub struct GeometryCache {
    pub triangle_area: Vec<f64>,
    pub triangle_centroid: Vec<Point>,
    pub face_length: Vec<f64>,
    /// Unit normal, pointing from the left triangle to the right.
    pub face_normal: Vec<Point>,
    pub face_centroid: Vec<Point>,
    /// `n_out . (x_face - x_cell)` for each local face of each triangle.
    pub triangle_face_distance: Vec<[f64; 3]>,
    pub fracture_length: Vec<f64>,
    /// Unit tangent along `vertices[0] -> vertices[1]`.
    pub fracture_tangent: Vec<Point>,
    /// Fracture normal, pointing to the plus side.
    pub fracture_normal: Vec<Point>,
    pub fracture_centroid: Vec<Point>,
    /// Arclength of each fracture cell centre, measured from the first vertex
    /// of its fracture polyline.
    pub fracture_arclength: Vec<f64>,
    pub fracture_total_length: Vec<f64>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

impl GeometryCache {
    pub fn new(mesh: &MixedMesh) -> Self {
        let nt = mesh.triangles.len();
        let mut triangle_area = Vec::with_capacity(nt);
        let mut triangle_centroid = Vec::with_capacity(nt);
        for tri in &mesh.triangles {
            let [a, b, c] = tri.map(|v| mesh.vertices[v]);
            triangle_area.push(super::signed_area(a, b, c));
            triangle_centroid.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
        }

        let nf = mesh.faces.len();
        let mut face_length = Vec::with_capacity(nf);
        let mut face_normal = Vec::with_capacity(nf);
        let mut face_centroid = Vec::with_capacity(nf);
        for face in &mesh.faces {
            let [a, b] = face.vertices.map(|v| mesh.vertices[v]);
            let d = sub(b, a);
            let len = norm(d);
            face_length.push(len);
            face_normal.push([d[1] / len, -d[0] / len]);
            face_centroid.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }

        let triangle_face_distance = (0..nt)
            .map(|t| {
                let mut d = [0.0; 3];
                for (i, &f) in mesh.triangle_faces[t].iter().enumerate() {
                    let n = face_normal[f];
                    let s = mesh.face_sign(t, f);
                    d[i] = s * dot(n, sub(face_centroid[f], triangle_centroid[t]));
                }
                d
            })
            .collect();

        let nc = mesh.fracture_cells.len();
        let mut fracture_length = Vec::with_capacity(nc);
        let mut fracture_tangent = Vec::with_capacity(nc);
        let mut fracture_normal = Vec::with_capacity(nc);
        let mut fracture_centroid = Vec::with_capacity(nc);
        for cell in &mesh.fracture_cells {
            let [a, b] = cell.vertices.map(|v| mesh.vertices[v]);
            let d = sub(b, a);
            let len = norm(d);
            let t = [d[0] / len, d[1] / len];
            fracture_length.push(len);
            fracture_tangent.push(t);
            fracture_normal.push([-t[1], t[0]]);
            fracture_centroid.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
        let mut fracture_arclength = vec![0.0; nc];
        let mut fracture_total_length = Vec::with_capacity(mesh.fractures.len());
        for fr in &mesh.fractures {
            let mut s = 0.0;
            for &c in &fr.cells {
                fracture_arclength[c] = s + 0.5 * fracture_length[c];
                s += fracture_length[c];
            }
            fracture_total_length.push(s);
        }

        GeometryCache {
            triangle_area,
            triangle_centroid,
            face_length,
            face_normal,
            face_centroid,
            triangle_face_distance,
            fracture_length,
            fracture_tangent,
            fracture_normal,
            fracture_centroid,
            fracture_arclength,
            fracture_total_length,
        }
    }

    /// Largest angle, in degrees, between an outward face normal and the
    /// segment joining the cell centroid to the face midpoint. Two-point
    /// fluxes are consistent when this stays small.
    pub fn max_tpfa_angle_deg(&self, mesh: &MixedMesh) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, faces) in mesh.triangle_faces.iter().enumerate() {
            for (i, &f) in faces.iter().enumerate() {
                let conn = sub(self.face_centroid[f], self.triangle_centroid[t]);
                let cos = (self.triangle_face_distance[t][i] / norm(conn)).clamp(-1.0, 1.0);
                worst = worst.max(cos.acos().to_degrees());
            }
        }
        worst
    }

    /// Half transmissibility `|e| / d` of local face `i` of triangle `t`, with
    /// `d` the distance from the centroid to the face line (unit diffusivity).
    pub fn half_transmissibility(&self, mesh: &MixedMesh, t: usize, i: usize) -> f64 {
        let f = mesh.triangle_faces[t][i];
        self.face_length[f] / self.triangle_face_distance[t][i]
    }

    /// Local index of face `f` in triangle `t`.
    pub fn local_face(mesh: &MixedMesh, t: usize, f: usize) -> usize {
        mesh.triangle_faces[t]
            .iter()
            .position(|&x| x == f)
            .expect("face not incident to triangle")
    }

    pub fn total_area(&self) -> f64 {
        self.triangle_area.iter().sum()
    }

    /// Sum over each triangle of `|e| n_out`; zero for closed cells.
    pub fn closure_defect(&self, mesh: &MixedMesh) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, faces) in mesh.triangle_faces.iter().enumerate() {
            let mut acc = [0.0, 0.0];
            for &f in faces {
                let s = mesh.face_sign(t, f) * self.face_length[f];
                acc[0] += s * self.face_normal[f][0];
                acc[1] += s * self.face_normal[f][1];
            }
            worst = worst.max(norm(acc));
        }
        worst
    }

    /// Coordinates of the point carried by a fracture face.
    pub fn fracture_face_point(&self, mesh: &MixedMesh, ff: usize) -> Point {
        mesh.vertices[mesh.fracture_faces[ff].vertex]
    }

    /// Boundary faces with the given tag id.
    pub fn faces_with_tag(mesh: &MixedMesh, tag: usize) -> impl Iterator<Item = usize> + '_ {
        mesh.faces
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.kind == FaceKind::Boundary { tag })
            .map(|(i, _)| i)
    }

    /// Fracture tips lying on the boundary with the given tag id.
    pub fn tips_with_tag(mesh: &MixedMesh, tag: usize) -> impl Iterator<Item = usize> + '_ {
        mesh.fracture_faces
            .iter()
            .enumerate()
            .filter(move |(_, f)| matches!(f.kind, FractureFaceKind::Tip { tag: Some(t), .. } if t == tag))
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_right_triangle() {
        let mesh = MixedMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            &[
                ([0, 1], "b".to_string()),
                ([1, 2], "h".to_string()),
                ([2, 0], "l".to_string()),
            ],
            &[],
        )
        .unwrap();
        let g = GeometryCache::new(&mesh);
        assert_abs_diff_eq!(g.triangle_area[0], 0.5, epsilon = 1e-15);
        assert!(g.closure_defect(&mesh) < 1e-12);
        assert!(g.triangle_face_distance[0].iter().all(|&d| d > 0.0));
    }

    #[test]
    fn left_to_right_orientation() {
        // Face (0,0)-(1,0) with its left triangle above has normal (0,-1).
        let mesh = MixedMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0]],
            vec![[0, 1, 2], [1, 0, 3]],
            &[
                ([1, 2], "a".to_string()),
                ([2, 0], "a".to_string()),
                ([0, 3], "a".to_string()),
                ([3, 1], "a".to_string()),
            ],
            &[],
        )
        .unwrap();
        let g = GeometryCache::new(&mesh);
        let f = mesh
            .faces
            .iter()
            .position(|f| matches!(f.kind, FaceKind::Interior { .. }))
            .unwrap();
        assert_eq!(mesh.faces[f].left, 0);
        assert_abs_diff_eq!(g.face_normal[f][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.face_normal[f][1], -1.0, epsilon = 1e-15);
    }
}

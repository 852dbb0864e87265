use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{MixedMesh, Point};
use crate::error::MeshError;

const TOL: f64 = 1e-10;

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

fn snap(x: f64) -> f64 {
    if x.abs() < TOL {
        0.0
    } else if (x - 1.0).abs() < TOL {
        1.0
    } else {
        x
    }
}

fn on_boundary(p: Point) -> bool {
    p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
}

fn validate_segments(segments: &[[Point; 2]]) -> Result<Vec<[Point; 2]>, MeshError> {
    let mut out = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        let mut s = *seg;
        for p in &mut s {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(MeshError::InvalidInput(format!(
                    "segment {i} has a non-finite endpoint"
                )));
            }
            if p[0] < -TOL || p[0] > 1.0 + TOL || p[1] < -TOL || p[1] > 1.0 + TOL {
                return Err(MeshError::InvalidInput(format!(
                    "segment {i} endpoint ({}, {}) lies outside the unit square",
                    p[0], p[1]
                )));
            }
            *p = [snap(p[0]), snap(p[1])];
        }
        let [a, b] = s;
        if (b[0] - a[0]).hypot(b[1] - a[1]) < 1e-12 {
            return Err(MeshError::InvalidInput(format!("segment {i} has zero length")));
        }
        let along_side =
            (a[0] == b[0] && (a[0] == 0.0 || a[0] == 1.0)) || (a[1] == b[1] && (a[1] == 0.0 || a[1] == 1.0));
        if along_side {
            return Err(MeshError::InvalidInput(format!(
                "segment {i} runs along the domain boundary"
            )));
        }
        out.push(s);
    }
    Ok(out)
}

/// Boundary points of the unit square, counter-clockwise from the origin. Each
/// side is split at spacing close to `h`, and the given extra points (fracture
/// endpoints on the boundary) are kept exactly.
fn boundary_loop(h: f64, extra: &[Point]) -> Vec<Point> {
    let n = (1.0 / h).ceil().max(1.0) as usize;
    // Perimeter parameter in [0, 4).
    let param = |p: Point| -> f64 {
        if p[1] == 0.0 {
            p[0]
        } else if p[0] == 1.0 {
            1.0 + p[1]
        } else if p[1] == 1.0 {
            3.0 - p[0]
        } else {
            4.0 - p[1]
        }
    };
    let at = |s: f64| -> Point {
        let s = s.rem_euclid(4.0);
        match s {
            s if s < 1.0 => [s, 0.0],
            s if s < 2.0 => [1.0, s - 1.0],
            s if s < 3.0 => [3.0 - s, 1.0],
            s => [0.0, 4.0 - s],
        }
    };
    let mut fixed: Vec<f64> = (0..4).map(|k| k as f64).collect();
    for &p in extra {
        let s = param(p);
        if !fixed.iter().any(|&f| (f - s).abs() < 1e-12) {
            fixed.push(s);
        }
    }
    fixed.sort_by(|a, b| a.total_cmp(b));
    let mut params: Vec<f64> = fixed.clone();
    for side in 0..4 {
        for k in 1..n {
            let s = side as f64 + k as f64 / n as f64;
            if fixed.iter().all(|&f| (f - s).abs() > 0.3 / n as f64) {
                params.push(s);
            }
        }
    }
    params.sort_by(|a, b| a.total_cmp(b));
    params.into_iter().map(at).collect()
}

/// Meshes the unit square with a constrained Delaunay triangulation honouring
/// the given fracture segments. Crossing segments are split at their
/// intersection, which becomes a fracture intersection point. Boundary edges are
/// tagged `bottom`, `right`, `top` and `left`.
///
/// Away from the fractures each square of a grid of spacing
/// `1 / ceil(1 / target_h)` is split into four triangles through its centre.
/// Centroids of neighbouring triangles then lie on a common face normal, which
/// makes two-point fluxes exact for linear fields. Grid points too close to a
/// fracture are dropped and the vertices around the fractures are smoothed.
pub fn build_unit_square_with_fractures(segments: &[[Point; 2]], target_h: f64) -> Result<MixedMesh, MeshError> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(MeshError::InvalidInput(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    if target_h < 1e-3 {
        return Err(MeshError::InvalidInput(format!("target_h {target_h} is below 1e-3")));
    }
    let segments = validate_segments(segments)?;
    let n = (1.0 / target_h).ceil().max(1.0) as usize;
    let step = 1.0 / n as f64;

    let touching: Vec<Point> = segments.iter().flatten().copied().filter(|&p| on_boundary(p)).collect();
    let boundary = boundary_loop(target_h, &touching);

    let mut cdt = Cdt::new();
    let insert = |cdt: &mut Cdt, p: Point| -> Result<FixedVertexHandle, MeshError> {
        cdt.insert(Point2::new(p[0], p[1]))
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))
    };
    let handles = boundary
        .iter()
        .map(|&p| insert(&mut cdt, p))
        .collect::<Result<Vec<_>, _>>()?;
    for k in 0..handles.len() {
        cdt.add_constraint(handles[k], handles[(k + 1) % handles.len()]);
    }

    // Square corners followed by square centres.
    let mut lattice: Vec<(Point, bool)> = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for i in 0..=n {
        for j in 0..=n {
            let interior = i > 0 && i < n && j > 0 && j < n;
            lattice.push(([i as f64 * step, j as f64 * step], interior));
        }
    }
    for i in 0..n {
        for j in 0..n {
            lattice.push(([(i as f64 + 0.5) * step, (j as f64 + 0.5) * step], true));
        }
    }

    // Split parameters per segment. Ends and crossings are mandatory; grid
    // points the segment passes through and fillers for long gaps are added
    // when they are not too close to a mandatory point.
    let mut mandatory: Vec<Vec<(f64, Point)>> = segments.iter().map(|s| vec![(0.0, s[0]), (1.0, s[1])]).collect();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            if let Some((ti, tj)) = crossing(&segments[i], &segments[j]) {
                // Shared ends keep their exact coordinates.
                let x = if ti == 0.0 || ti == 1.0 {
                    segments[i][ti as usize]
                } else if tj == 0.0 || tj == 1.0 {
                    segments[j][tj as usize]
                } else {
                    let [a, b] = segments[i];
                    [a[0] + ti * (b[0] - a[0]), a[1] + ti * (b[1] - a[1])]
                };
                mandatory[i].push((ti, x));
                mandatory[j].push((tj, x));
            }
        }
    }
    for (seg, keep) in segments.iter().zip(&mandatory) {
        let [a, b] = *seg;
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let far = |t: f64| keep.iter().all(|&(k, _)| (t - k).abs() * len > 0.3 * step);
        let mut ts: Vec<(f64, Point)> = keep.clone();
        for &(p, _) in &lattice {
            let r = [p[0] - a[0], p[1] - a[1]];
            let t = (r[0] * d[0] + r[1] * d[1]) / (len * len);
            let dist = (r[0] * d[1] - r[1] * d[0]).abs() / len;
            if dist < 1e-12 && t > 0.0 && t < 1.0 && far(t) {
                ts.push((t, p));
            }
        }
        ts.sort_by(|x, y| x.0.total_cmp(&y.0));
        ts.dedup_by(|x, y| (x.0 - y.0).abs() * len < 1e-12);
        let mut filled = vec![a];
        for w in ts.windows(2) {
            let (p, q) = (w[0].1, w[1].1);
            let gap = (w[1].0 - w[0].0) * len;
            let pieces = if gap > 1.5 * step {
                (gap / step).round() as usize
            } else {
                1
            };
            for k in 1..pieces {
                let t = k as f64 / pieces as f64;
                filled.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
            filled.push(q);
        }
        let mut prev = insert(&mut cdt, a)?;
        for &x in &filled[1..] {
            let next = insert(&mut cdt, x)?;
            if next != prev {
                cdt.add_constraint_and_split(prev, next, |p| p);
            }
            prev = next;
        }
    }

    let clearance = 0.35 * step;
    for &(p, interior) in &lattice {
        if !interior || segments.iter().any(|s| distance_to_segment(p, s) < clearance) {
            continue;
        }
        insert(&mut cdt, p)?;
    }

    pin_grid_edges(&mut cdt, n, &segments);
    extract(&cdt, &segments)
}

/// Constrains the square edges that no fracture crosses. Corners and centres
/// together are cocircular in groups of four, and without these constraints the
/// triangulation may join two centres instead of two corners.
fn pin_grid_edges(cdt: &mut Cdt, n: usize, segments: &[[Point; 2]]) {
    use std::collections::HashMap;
    let scale = n as f64;
    let mut corners: HashMap<(i64, i64), FixedVertexHandle> = HashMap::new();
    for v in cdt.vertices() {
        let p = v.position();
        let (x, y) = (p.x * scale, p.y * scale);
        let (i, j) = (x.round(), y.round());
        if (x - i).abs() < 1e-9 && (y - j).abs() < 1e-9 {
            corners.insert((i as i64, j as i64), v.fix());
        }
    }
    let blocked = |a: Point, b: Point| -> bool {
        let edge = [a, b];
        segments.iter().any(|s| {
            if let Some((t, _)) = crossing(&edge, s) {
                return t > 1e-9 && t < 1.0 - 1e-9;
            }
            // Parallel: blocked when the two overlap.
            let d = [b[0] - a[0], b[1] - a[1]];
            let e = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
            if (d[0] * e[1] - d[1] * e[0]).abs() > 1e-14 {
                return false;
            }
            let r = [s[0][0] - a[0], s[0][1] - a[1]];
            let off = (r[0] * d[1] - r[1] * d[0]).abs() / d[0].hypot(d[1]);
            if off > 1e-12 {
                return false;
            }
            let len2 = d[0] * d[0] + d[1] * d[1];
            let proj = |p: Point| ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
            let (lo, hi) = {
                let (u, w) = (proj(s[0]), proj(s[1]));
                (u.min(w), u.max(w))
            };
            hi > 1e-9 && lo < 1.0 - 1e-9
        })
    };
    let n = n as i64;
    for i in 0..=n {
        for j in 0..=n {
            for (di, dj) in [(1, 0), (0, 1)] {
                let (k, l) = (i + di, j + dj);
                if k > n || l > n {
                    continue;
                }
                let (Some(&from), Some(&to)) = (corners.get(&(i, j)), corners.get(&(k, l))) else {
                    continue;
                };
                let a = [i as f64 / scale, j as f64 / scale];
                let b = [k as f64 / scale, l as f64 / scale];
                if cdt.exists_constraint(from, to) || blocked(a, b) || !cdt.can_add_constraint(from, to) {
                    continue;
                }
                cdt.add_constraint(from, to);
            }
        }
    }
}

/// Parameters on both segments of a transversal crossing, if any.
fn crossing(s: &[Point; 2], r: &[Point; 2]) -> Option<(f64, f64)> {
    let d1 = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let d2 = [r[1][0] - r[0][0], r[1][1] - r[0][1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    if den.abs() < 1e-14 {
        return None;
    }
    let w = [r[0][0] - s[0][0], r[0][1] - s[0][1]];
    let t = (w[0] * d2[1] - w[1] * d2[0]) / den;
    let u = (w[0] * d1[1] - w[1] * d1[0]) / den;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

fn distance_to_segment(p: Point, seg: &[Point; 2]) -> f64 {
    let [a, b] = *seg;
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Largest angle, in degrees, between an edge's outward normal and the segment
/// from the triangle centroid to the edge midpoint.
fn triangle_skew(p: [Point; 3]) -> f64 {
    let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let n = [b[1] - a[1], a[0] - b[0]];
        let m = [0.5 * (a[0] + b[0]) - c[0], 0.5 * (a[1] + b[1]) - c[1]];
        let cos = (n[0] * m[0] + n[1] * m[1]) / (n[0].hypot(n[1]) * m[0].hypot(m[1]));
        worst = worst.max(cos.clamp(-1.0, 1.0).acos());
    }
    worst.to_degrees()
}

const OPTIMISATION_SWEEPS: usize = 40;

/// Moves free vertices, keeping the connectivity, whenever the move lowers the
/// worst skew among the incident triangles.
fn reduce_skew(vertices: &mut [Point], triangles: &[[usize; 3]], fixed: &[bool]) {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let local = |vertices: &[Point], v: usize| -> Option<f64> {
        let mut worst: f64 = 0.0;
        for &t in &incident[v] {
            let p = triangles[t].map(|k| vertices[k]);
            if super::signed_area(p[0], p[1], p[2]) <= 0.0 {
                return None;
            }
            worst = worst.max(triangle_skew(p));
        }
        Some(worst)
    };
    for sweep in 0..OPTIMISATION_SWEEPS {
        let mut moved = false;
        for v in 0..vertices.len() {
            if fixed[v] || incident[v].is_empty() {
                continue;
            }
            let Some(mut best) = local(vertices, v) else { continue };
            let p = vertices[v];
            let mut acc = [0.0, 0.0, 0.0];
            let mut size: f64 = f64::INFINITY;
            for &t in &incident[v] {
                let q = triangles[t].map(|k| vertices[k]);
                let a = super::signed_area(q[0], q[1], q[2]);
                acc[0] += a * (q[0][0] + q[1][0] + q[2][0]) / 3.0;
                acc[1] += a * (q[0][1] + q[1][1] + q[2][1]) / 3.0;
                acc[2] += a;
                size = size.min(a.sqrt());
            }
            let centre = [acc[0] / acc[2], acc[1] / acc[2]];
            let delta = 0.2 * size / (1.0 + sweep as f64 / 10.0);
            let mut candidates = Vec::with_capacity(11);
            for alpha in [1.0, 0.5, 0.25] {
                candidates.push([p[0] + alpha * (centre[0] - p[0]), p[1] + alpha * (centre[1] - p[1])]);
            }
            for k in 0..8 {
                let ang = k as f64 * std::f64::consts::FRAC_PI_4;
                candidates.push([p[0] + delta * ang.cos(), p[1] + delta * ang.sin()]);
            }
            let mut best_pos = p;
            for c in candidates {
                vertices[v] = c;
                if let Some(s) = local(vertices, v) {
                    if s < best - 1e-9 {
                        best = s;
                        best_pos = c;
                    }
                }
            }
            vertices[v] = best_pos;
            moved |= best_pos != p;
        }
        if !moved {
            break;
        }
    }
}

fn extract(cdt: &Cdt, segments: &[[Point; 2]]) -> Result<MixedMesh, MeshError> {
    let mut vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [snap(p.x), snap(p.y)]
        })
        .collect();

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        if super::signed_area(vertices[a], vertices[b], vertices[c]) > 0.0 {
            triangles.push([a, b, c]);
        } else {
            triangles.push([a, c, b]);
        }
    }

    // Boundary and fracture vertices keep their positions.
    let fixed: Vec<bool> = vertices
        .iter()
        .map(|&p| on_boundary(p) || segments.iter().any(|s| distance_to_segment(p, s) < 1e-9))
        .collect();
    reduce_skew(&mut vertices, &triangles, &fixed);

    let mut tags: Vec<([usize; 2], String)> = Vec::new();
    for edge in cdt.undirected_edges() {
        let [u, v] = edge.vertices().map(|v| v.fix().index());
        let (p, q) = (vertices[u], vertices[v]);
        let name = if p[1] == 0.0 && q[1] == 0.0 {
            "bottom"
        } else if p[1] == 1.0 && q[1] == 1.0 {
            "top"
        } else if p[0] == 0.0 && q[0] == 0.0 {
            "left"
        } else if p[0] == 1.0 && q[0] == 1.0 {
            "right"
        } else {
            continue;
        };
        tags.push(([u, v], name.to_string()));
    }

    let mut polylines = Vec::with_capacity(segments.len());
    for (i, &[a, b]) in segments.iter().enumerate() {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let len = len2.sqrt();
        let mut chain: Vec<(f64, usize)> = Vec::new();
        for (k, p) in vertices.iter().enumerate() {
            if !fixed[k] {
                continue;
            }
            let r = [p[0] - a[0], p[1] - a[1]];
            let t = (r[0] * d[0] + r[1] * d[1]) / len2;
            let dist = (r[0] * d[1] - r[1] * d[0]).abs() / len;
            if dist < 1e-9 && t > -1e-9 && t < 1.0 + 1e-9 {
                chain.push((t, k));
            }
        }
        chain.sort_by(|x, y| x.0.total_cmp(&y.0));
        let ids: Vec<usize> = chain.into_iter().map(|(_, k)| k).collect();
        for w in ids.windows(2) {
            let from = FixedVertexHandle::from_index(w[0]);
            let to = FixedVertexHandle::from_index(w[1]);
            if !cdt.exists_constraint(from, to) {
                return Err(MeshError::Triangulation(format!(
                    "fracture {i} is not resolved by triangle edges"
                )));
            }
        }
        polylines.push(ids);
    }

    MixedMesh::from_parts(vertices, triangles, &tags, &polylines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GeometryCache;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_square_has_unit_area() {
        let mesh = build_unit_square_with_fractures(&[], 0.5).unwrap();
        let g = GeometryCache::new(&mesh);
        assert_abs_diff_eq!(g.total_area(), 1.0, epsilon = 1e-12);
        assert_eq!(mesh.num_fracture_cells(), 0);
        for name in ["bottom", "top", "left", "right"] {
            assert!(mesh.tag_id(name).is_some(), "{name}");
        }
    }

    #[test]
    fn single_fracture_length() {
        let mesh = build_unit_square_with_fractures(&[[[0.1, 0.0], [0.9, 0.8]]], 0.1).unwrap();
        let g = GeometryCache::new(&mesh);
        let total: f64 = g.fracture_length.iter().sum();
        assert_abs_diff_eq!(total, 0.8f64.hypot(0.8), epsilon = 1e-12);
        assert_abs_diff_eq!(g.total_area(), 1.0, epsilon = 1e-12);
        assert_eq!(mesh.fractures.len(), 1);
        assert!(mesh.intersections.is_empty());
    }

    #[test]
    fn crossing_segments_share_one_point() {
        let segs = [[[0.2, 0.2], [0.8, 0.8]], [[0.2, 0.8], [0.8, 0.2]]];
        let mesh = build_unit_square_with_fractures(&segs, 0.1).unwrap();
        assert_eq!(mesh.num_intersections(), 1);
        assert_eq!(mesh.intersections[0].cells.len(), 4);
        let p = mesh.vertices[mesh.intersections[0].vertex];
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_point_skew_stays_below_bound() {
        let network: Vec<[Point; 2]> = vec![
            [[0.10, 0.10], [0.50, 0.50]],
            [[0.10, 0.40], [0.40, 0.10]],
            [[0.30, 0.60], [0.70, 0.60]],
            [[0.50, 0.40], [0.50, 0.80]],
            [[0.60, 0.20], [0.90, 0.20]],
            [[0.75, 0.05], [0.75, 0.45]],
            [[0.60, 0.65], [0.85, 0.90]],
            [[0.65, 0.85], [0.85, 0.65]],
            [[0.10, 0.70], [0.25, 0.85]],
            [[0.15, 0.55], [0.15, 0.90]],
        ];
        let single = vec![[[0.1, 0.0], [0.9, 0.8]]];
        for (segs, h) in [(&single, 0.1), (&single, 0.05), (&network, 0.05)] {
            let mesh = build_unit_square_with_fractures(segs, h).unwrap();
            let angle = GeometryCache::new(&mesh).max_tpfa_angle_deg(&mesh);
            assert!(angle < 30.0, "h = {h}: {angle}");
        }
    }

    #[test]
    fn linear_fields_have_orthogonal_connectors() {
        // Neighbouring centroids lie on the normal of the shared face.
        let mesh = build_unit_square_with_fractures(&[], 0.1).unwrap();
        let g = GeometryCache::new(&mesh);
        for (f, face) in mesh.faces.iter().enumerate() {
            if let crate::mesh::FaceKind::Interior { right } = face.kind {
                let c = [
                    g.triangle_centroid[right][0] - g.triangle_centroid[face.left][0],
                    g.triangle_centroid[right][1] - g.triangle_centroid[face.left][1],
                ];
                let n = g.face_normal[f];
                assert!((c[0] * n[1] - c[1] * n[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_unit_square_with_fractures(&[], 0.0).is_err());
        assert!(build_unit_square_with_fractures(&[], -1.0).is_err());
        assert!(build_unit_square_with_fractures(&[[[0.3, 0.3], [0.3, 0.3]]], 0.1).is_err());
        assert!(build_unit_square_with_fractures(&[[[0.3, 0.3], [1.3, 0.3]]], 0.1).is_err());
        assert!(build_unit_square_with_fractures(&[[[0.0, 0.2], [0.0, 0.6]]], 0.1).is_err());
    }
}

//! Implicit finite-volume step for an advected and diffused scalar on the
//! mixed-dimensional grid. Advection is upwinded on the Darcy fluxes; diffusion
//! uses two-point fluxes. Fracture intersections carry no storage.

use crate::darcy::FlowSolution;
use crate::error::SimError;
use crate::linsolve::TripletMatrix;
use crate::mesh::{FaceKind, FractureFaceKind, GeometryCache, MixedMesh};

/// Values of a scalar on triangles, fracture cells and intersection points.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub matrix: Vec<f64>,
    pub fracture: Vec<f64>,
    pub intersection: Vec<f64>,
}

impl ScalarField {
    pub fn uniform(mesh: &MixedMesh, value: f64) -> Self {
        ScalarField {
            matrix: vec![value; mesh.num_triangles()],
            fracture: vec![value; mesh.num_fracture_cells()],
            intersection: vec![value; mesh.num_intersections()],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.matrix.iter().chain(&self.fracture).chain(&self.intersection)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Coefficients of one scalar equation
/// `d(S v)/dt + div(a q v - D grad v) = source`.
#[derive(Clone, Copy, Debug)]
pub struct ScalarProblem<'a> {
    /// Storage per unit area on each triangle.
    pub matrix_storage: &'a [f64],
    /// Storage per unit length on each fracture cell.
    pub fracture_storage: &'a [f64],
    /// Factor `a` multiplying the Darcy flux in the advective term.
    pub advective_factor: f64,
    pub matrix_diffusivity: &'a [f64],
    /// Tangential diffusivity, already integrated across the aperture.
    pub fracture_diffusivity: &'a [f64],
    /// Diffusivity across the fracture walls. With aperture `eps` the wall
    /// conductance per unit length is `2 D_n / eps`.
    pub normal_diffusivity: f64,
    pub aperture: &'a [f64],
    /// Source per unit area on each triangle.
    pub matrix_source: &'a [f64],
    /// Source per unit length on each fracture cell.
    pub fracture_source: &'a [f64],
    /// Prescribed value per mesh tag; `None` marks an outflow side.
    pub boundary: &'a [Option<f64>],
}

/// Result of [`implicit_step`].
#[derive(Clone, Debug)]
pub struct ScalarStep {
    pub field: ScalarField,
    /// Net rate at which the scalar (times the advective factor) enters
    /// through the outer boundary, evaluated at the new time level.
    pub boundary_inflow: f64,
    /// Rate of transfer from the matrix into each fracture cell, `[plus, minus]`.
    pub exchange: Vec<[f64; 2]>,
}

fn series(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else if b.is_infinite() {
        a
    } else if a.is_infinite() {
        b
    } else {
        a * b / (a + b)
    }
}

/// Couples unknowns `i` and `j` through an integrated flux `q` from `i` to `j`
/// and a diffusive transmissibility `t`.
fn connect(a: &mut TripletMatrix, i: usize, j: usize, q: f64, adv: f64, t: f64) {
    let out = adv * q.max(0.0);
    let back = adv * q.min(0.0);
    a.add(i, i, out + t);
    a.add(i, j, back - t);
    a.add(j, i, -out - t);
    a.add(j, j, -back + t);
}

/// Couples unknown `i` to the outside through an outward flux `q`.
fn connect_boundary(a: &mut TripletMatrix, rhs: &mut [f64], i: usize, q: f64, adv: f64, t: f64, value: Option<f64>) {
    match value {
        Some(v) => {
            a.add(i, i, adv * q.max(0.0) + t);
            rhs[i] -= (adv * q.min(0.0) - t) * v;
        }
        None => a.add(i, i, adv * q),
    }
}

fn boundary_outflow(q: f64, adv: f64, t: f64, value: Option<f64>, u: f64) -> f64 {
    match value {
        Some(v) => adv * (q.max(0.0) * u + q.min(0.0) * v) + t * (u - v),
        None => adv * q * u,
    }
}

/// Half transmissibility from a fracture cell centre to either end.
fn fracture_half(geom: &GeometryCache, problem: &ScalarProblem, c: usize) -> f64 {
    problem.fracture_diffusivity[c] / (0.5 * geom.fracture_length[c])
}

fn wall_conductance(problem: &ScalarProblem, c: usize, length: f64) -> f64 {
    let eps = problem.aperture[c];
    if eps > 0.0 {
        2.0 * problem.normal_diffusivity * length / eps
    } else {
        f64::INFINITY
    }
}

/// Advances the scalar by one implicit Euler step of length `dt`.
pub fn implicit_step(
    mesh: &MixedMesh,
    geom: &GeometryCache,
    flow: &FlowSolution,
    problem: &ScalarProblem,
    old: &ScalarField,
    dt: f64,
    stage: &'static str,
) -> Result<ScalarStep, SimError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let nt = mesh.num_triangles();
    let nc = mesh.num_fracture_cells();
    let ni = mesh.num_intersections();
    if problem.boundary.len() < mesh.tags.len() {
        return Err(SimError::InvalidParameter(
            "missing boundary value for a mesh tag".into(),
        ));
    }
    let frac = |c: usize| nt + c;
    let point = |i: usize| nt + nc + i;
    let n = nt + nc + ni;
    let adv = problem.advective_factor;
    let mut a = TripletMatrix::new(n);
    let mut rhs = vec![0.0; n];

    for t in 0..nt {
        let m = problem.matrix_storage[t] * geom.triangle_area[t] / dt;
        a.add(t, t, m);
        rhs[t] += m * old.matrix[t] + problem.matrix_source[t] * geom.triangle_area[t];
    }
    for c in 0..nc {
        let len = geom.fracture_length[c];
        let m = problem.fracture_storage[c] * len / dt;
        a.add(frac(c), frac(c), m);
        rhs[frac(c)] += m * old.fracture[c] + problem.fracture_source[c] * len;
    }

    let half = |t: usize, f: usize| -> f64 {
        let i = GeometryCache::local_face(mesh, t, f);
        problem.matrix_diffusivity[t] * geom.half_transmissibility(mesh, t, i)
    };

    for (f, face) in mesh.faces.iter().enumerate() {
        let q = flow.face_flux[f];
        let l = face.left;
        match face.kind {
            FaceKind::Interior { right } => {
                connect(&mut a, l, right, q, adv, series(half(l, f), half(right, f)));
            }
            FaceKind::Boundary { tag } => {
                let value = problem.boundary[tag];
                let t = if value.is_some() { half(l, f) } else { 0.0 };
                connect_boundary(&mut a, &mut rhs, l, q, adv, t, value);
            }
            FaceKind::Fracture { cell, .. } => {
                let t = series(half(l, f), wall_conductance(problem, cell, geom.face_length[f]));
                connect(&mut a, l, frac(cell), q, adv, t);
            }
        }
    }

    for (ff, face) in mesh.fracture_faces.iter().enumerate() {
        let q = flow.fracture_face_flux[ff];
        match face.kind {
            FractureFaceKind::Internal { cells } => {
                let t = series(
                    fracture_half(geom, problem, cells[0]),
                    fracture_half(geom, problem, cells[1]),
                );
                connect(&mut a, frac(cells[0]), frac(cells[1]), q, adv, t);
            }
            FractureFaceKind::Intersection { cell, point: p } => {
                connect(&mut a, frac(cell), point(p), q, adv, fracture_half(geom, problem, cell));
            }
            FractureFaceKind::Tip { cell, tag } => {
                let value = tag.and_then(|t| problem.boundary[t]);
                let t = if value.is_some() {
                    fracture_half(geom, problem, cell)
                } else {
                    0.0
                };
                connect_boundary(&mut a, &mut rhs, frac(cell), q, adv, t, value);
            }
        }
    }

    // An intersection with no flow and no diffusion through it takes the mean
    // of its neighbours so that the system stays regular.
    for (i, pt) in mesh.intersections.iter().enumerate() {
        let active = pt.faces.iter().any(|&ff| {
            let FractureFaceKind::Intersection { cell, .. } = mesh.fracture_faces[ff].kind else {
                return false;
            };
            flow.fracture_face_flux[ff] != 0.0 || fracture_half(geom, problem, cell) > 0.0
        });
        if !active {
            let row = point(i);
            a.add(row, row, 1.0);
            let w = 1.0 / pt.cells.len() as f64;
            for &c in &pt.cells {
                a.add(row, frac(c), -w);
            }
        }
    }

    let x = a.solve(&rhs, stage)?;
    let field = ScalarField {
        matrix: x[..nt].to_vec(),
        fracture: x[nt..nt + nc].to_vec(),
        intersection: x[nt + nc..].to_vec(),
    };

    let mut boundary_inflow = 0.0;
    let mut exchange = vec![[0.0; 2]; nc];
    for (f, face) in mesh.faces.iter().enumerate() {
        let q = flow.face_flux[f];
        let l = face.left;
        match face.kind {
            FaceKind::Boundary { tag } => {
                let value = problem.boundary[tag];
                let t = if value.is_some() { half(l, f) } else { 0.0 };
                boundary_inflow -= boundary_outflow(q, adv, t, value, field.matrix[l]);
            }
            FaceKind::Fracture { cell, side } => {
                let t = series(half(l, f), wall_conductance(problem, cell, geom.face_length[f]));
                let (um, uf) = (field.matrix[l], field.fracture[cell]);
                let rate = adv * (q.max(0.0) * um + q.min(0.0) * uf) + t * (um - uf);
                exchange[cell][side as usize] = rate;
            }
            FaceKind::Interior { .. } => {}
        }
    }
    for (ff, face) in mesh.fracture_faces.iter().enumerate() {
        if let FractureFaceKind::Tip { cell, tag } = face.kind {
            let value = tag.and_then(|t| problem.boundary[t]);
            let t = if value.is_some() {
                fracture_half(geom, problem, cell)
            } else {
                0.0
            };
            boundary_inflow -= boundary_outflow(flow.fracture_face_flux[ff], adv, t, value, field.fracture[cell]);
        }
    }

    Ok(ScalarStep {
        field,
        boundary_inflow,
        exchange,
    })
}

/// Total stored amount `sum S v |measure|`.
pub fn stored_amount(
    geom: &GeometryCache,
    matrix_storage: &[f64],
    fracture_storage: &[f64],
    field: &ScalarField,
) -> f64 {
    let m: f64 = field
        .matrix
        .iter()
        .zip(matrix_storage)
        .zip(&geom.triangle_area)
        .map(|((v, s), a)| v * s * a)
        .sum();
    let f: f64 = field
        .fracture
        .iter()
        .zip(fracture_storage)
        .zip(&geom.fracture_length)
        .map(|((v, s), l)| v * s * l)
        .sum();
    m + f
}

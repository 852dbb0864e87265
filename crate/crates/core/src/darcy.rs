//! Mixed-dimensional Darcy flow with lowest-order Raviart-Thomas fluxes and
//! piecewise-constant pressures in the matrix and along the fractures.
//!
//! Unknowns are ordered as matrix face fluxes, triangle pressures, fracture face
//! fluxes, fracture cell pressures and intersection pressures. Matrix fluxes are
//! integrated over the face and oriented along the stored face normal; fluxes
//! through fracture side faces therefore point from the matrix into the
//! fracture. Fracture fluxes are integrated across the aperture.

use crate::error::SimError;
use crate::linsolve::TripletMatrix;
use crate::mesh::{FaceKind, FractureFaceKind, GeometryCache, MixedMesh, Point, Side};
use crate::params::{FlowBoundary, FlowCoefficients, SideCondition};

/// Apertures below this fraction of the reference aperture are raised to it
/// when computing the tangential fracture conductivity, which would otherwise
/// vanish and leave the tangential flux undetermined.
pub const TANGENTIAL_APERTURE_FLOOR: f64 = 1e-6;

/// Cellwise data for one flow solve.
#[derive(Clone, Copy, Debug)]
pub struct FlowProblem<'a> {
    /// Porosity used in the permeability law.
    pub porosity: &'a [f64],
    /// Aperture used in the permeability laws and the interface condition.
    pub aperture: &'a [f64],
    /// Estimated porosity rate `d phi / dt` per triangle.
    pub porosity_rate: &'a [f64],
    /// Estimated aperture rate `d eps / dt` per fracture cell.
    pub aperture_rate: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    /// Integrated flux per matrix face along its stored normal.
    pub face_flux: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Integrated flux per fracture face, oriented as in [`FractureFaceKind`].
    pub fracture_face_flux: Vec<f64>,
    pub fracture_pressure: Vec<f64>,
    pub intersection_pressure: Vec<f64>,
    /// Exchange flux density `[plus, minus]` per fracture cell, positive from
    /// the matrix into the fracture.
    pub exchange: Vec<[f64; 2]>,
    /// Matrix pressure trace `[plus, minus]` on the two sides of each fracture cell.
    pub side_trace: Vec<[f64; 2]>,
}

impl FlowSolution {
    /// Fluid at rest with uniform pressure.
    pub fn at_rest(mesh: &MixedMesh, pressure: f64) -> Self {
        FlowSolution {
            face_flux: vec![0.0; mesh.num_faces()],
            pressure: vec![pressure; mesh.num_triangles()],
            fracture_face_flux: vec![0.0; mesh.fracture_faces.len()],
            fracture_pressure: vec![pressure; mesh.num_fracture_cells()],
            intersection_pressure: vec![pressure; mesh.num_intersections()],
            exchange: vec![[0.0; 2]; mesh.num_fracture_cells()],
            side_trace: vec![[pressure; 2]; mesh.num_fracture_cells()],
        }
    }

    /// Outward flux of triangle `t` through its local face `i`.
    pub fn outward_flux(&self, mesh: &MixedMesh, t: usize, i: usize) -> f64 {
        let f = mesh.triangle_faces[t][i];
        mesh.face_sign(t, f) * self.face_flux[f]
    }

    /// Largest absolute mass-balance residual over triangles, fracture cells
    /// and intersection points.
    pub fn conservation_residual(
        &self,
        mesh: &MixedMesh,
        geom: &GeometryCache,
        problem: &FlowProblem,
        coeffs: &FlowCoefficients,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..mesh.num_triangles() {
            let out: f64 = (0..3).map(|i| self.outward_flux(mesh, t, i)).sum();
            let rhs = (-problem.porosity_rate[t] - coeffs.matrix_source) * geom.triangle_area[t];
            worst = worst.max((out - rhs).abs());
        }
        for (c, cell) in mesh.fracture_cells.iter().enumerate() {
            let mut out = 0.0;
            for &ff in &cell.ends {
                out += mesh.fracture_faces[ff].outward_sign(c).unwrap() * self.fracture_face_flux[ff];
            }
            out -= self.face_flux[cell.plus_face] + self.face_flux[cell.minus_face];
            let rhs =
                (-problem.aperture_rate[c] - problem.aperture[c] * coeffs.fracture_source) * geom.fracture_length[c];
            worst = worst.max((out - rhs).abs());
        }
        for point in &mesh.intersections {
            let s: f64 = point.faces.iter().map(|&ff| self.fracture_face_flux[ff]).sum();
            worst = worst.max(s.abs());
        }
        worst
    }

    /// Largest `|mu eps lambda + kappa (p_frac - p_trace)|` over fracture sides.
    pub fn jump_law_residual(&self, problem: &FlowProblem, coeffs: &FlowCoefficients) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, (lam, trace)) in self.exchange.iter().zip(&self.side_trace).enumerate() {
            let eps = problem.aperture[c];
            let kappa = coeffs.fracture_normal_permeability_ref * (eps / coeffs.aperture_ref).powi(2);
            for k in 0..2 {
                let r = coeffs.viscosity * eps * lam[k] + kappa * (self.fracture_pressure[c] - trace[k]);
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Net integrated flux entering the domain through faces and fracture tips
    /// carrying the given tag.
    pub fn inflow_through(&self, mesh: &MixedMesh, tag: usize) -> f64 {
        let mut total = 0.0;
        for f in GeometryCache::faces_with_tag(mesh, tag) {
            total -= self.face_flux[f];
        }
        for ff in GeometryCache::tips_with_tag(mesh, tag) {
            total -= self.fracture_face_flux[ff];
        }
        total
    }
}

struct Layout {
    nf: usize,
    nt: usize,
    nff: usize,
    nc: usize,
}

impl Layout {
    fn q(&self, f: usize) -> usize {
        f
    }
    fn p(&self, t: usize) -> usize {
        self.nf + t
    }
    fn qf(&self, ff: usize) -> usize {
        self.nf + self.nt + ff
    }
    fn pf(&self, c: usize) -> usize {
        self.nf + self.nt + self.nff + c
    }
    fn pi(&self, i: usize) -> usize {
        self.nf + self.nt + self.nff + self.nc + i
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Local RT0 matrix `int (mu/k) phi_i . phi_j` for outward unit-flux basis
/// functions `phi_i = (x - a_i) / (2|K|)`, `a_i` opposite local face `i`, and
/// the load `int b . phi_i` of a uniform body force `b`.
fn local_rt0(
    mesh: &MixedMesh,
    geom: &GeometryCache,
    t: usize,
    resistivity: f64,
    body: Point,
) -> ([[f64; 3]; 3], [f64; 3]) {
    let tri = mesh.triangles[t];
    let area = geom.triangle_area[t];
    let opp: [Point; 3] = std::array::from_fn(|i| mesh.vertices[mesh.opposite_vertex(t, i)]);
    let mids: [Point; 3] = std::array::from_fn(|i| {
        let a = mesh.vertices[tri[i]];
        let b = mesh.vertices[tri[(i + 1) % 3]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    });
    let scale = resistivity / (4.0 * area * area) * (area / 3.0);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = scale * mids.iter().map(|&x| dot(sub(x, opp[i]), sub(x, opp[j]))).sum::<f64>();
        }
    }
    let centroid = geom.triangle_centroid[t];
    let load = std::array::from_fn(|i| 0.5 * dot(body, sub(centroid, opp[i])));
    (m, load)
}

/// Assembles and solves the coupled matrix/fracture/intersection Darcy
/// system. `bc` holds the resolved condition of each mesh tag.
pub fn assemble_and_solve_darcy(
    mesh: &MixedMesh,
    geom: &GeometryCache,
    problem: &FlowProblem,
    bc: &[SideCondition],
    coeffs: &FlowCoefficients,
) -> Result<FlowSolution, SimError> {
    const STAGE: &str = "darcy";
    coeffs.validate()?;
    let nt = mesh.num_triangles();
    let nc = mesh.num_fracture_cells();
    if problem.porosity.len() != nt
        || problem.porosity_rate.len() != nt
        || problem.aperture.len() != nc
        || problem.aperture_rate.len() != nc
    {
        return Err(SimError::InvalidParameter(
            "field length does not match the mesh".into(),
        ));
    }
    if bc.len() < mesh.tags.len() {
        return Err(SimError::InvalidParameter(
            "missing boundary condition for a mesh tag".into(),
        ));
    }
    if problem.aperture.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(SimError::InvalidParameter(
            "aperture must be finite and nonnegative".into(),
        ));
    }
    if problem
        .porosity_rate
        .iter()
        .chain(problem.aperture_rate)
        .any(|v| !v.is_finite())
    {
        return Err(SimError::NonFinite { stage: STAGE });
    }

    let lay = Layout {
        nf: mesh.num_faces(),
        nt,
        nff: mesh.fracture_faces.len(),
        nc,
    };
    let n = lay.pi(mesh.num_intersections());
    let mut a = TripletMatrix::new(n);
    let mut rhs = vec![0.0; n];
    let mu = coeffs.viscosity;
    // The driving force rho g e_z with e_z pointing down (-y).
    let body = [0.0, -coeffs.fluid_density * coeffs.gravity];

    // Matrix: local Darcy law rows, assembled face by face.
    let mut local = Vec::with_capacity(nt);
    for t in 0..nt {
        let k = coeffs.matrix_permeability(problem.porosity[t])?;
        local.push(local_rt0(mesh, geom, t, mu / k, body));
    }
    // Adds `sign * (sum_j M_ij Q_j - p_K - G_i)` of triangle t to `row`, scaled.
    let add_law = |a: &mut TripletMatrix, rhs: &mut [f64], row: usize, t: usize, i: usize, scale: f64| {
        let (m, g) = &local[t];
        for j in 0..3 {
            let f = mesh.triangle_faces[t][j];
            a.add(row, lay.q(f), scale * m[i][j] * mesh.face_sign(t, f));
        }
        a.add(row, lay.p(t), -scale);
        rhs[row] += scale * g[i];
    };

    for (f, face) in mesh.faces.iter().enumerate() {
        let row = lay.q(f);
        let t = face.left;
        let i = GeometryCache::local_face(mesh, t, f);
        match face.kind {
            FaceKind::Interior { right } => {
                add_law(&mut a, &mut rhs, row, t, i, 1.0);
                let j = GeometryCache::local_face(mesh, right, f);
                add_law(&mut a, &mut rhs, row, right, j, -1.0);
            }
            FaceKind::Boundary { tag } => match bc[tag].flow {
                FlowBoundary::Pressure(pd) => {
                    add_law(&mut a, &mut rhs, row, t, i, 1.0);
                    rhs[row] -= pd;
                }
                FlowBoundary::Flux(g) => {
                    a.add(row, row, 1.0);
                    rhs[row] = g * geom.face_length[f];
                }
            },
            FaceKind::Fracture { cell, .. } => {
                // Robin law: Q / |e| = alpha (trace - p_frac), alpha = kappa / (mu eps).
                let eps = problem.aperture[cell];
                let alpha =
                    coeffs.fracture_normal_permeability_ref * eps / (mu * coeffs.aperture_ref * coeffs.aperture_ref);
                let w = alpha * geom.face_length[f];
                add_law(&mut a, &mut rhs, row, t, i, w);
                a.add(row, lay.pf(cell), w);
                a.add(row, row, 1.0);
            }
        }
    }

    for t in 0..nt {
        let row = lay.p(t);
        for &f in &mesh.triangle_faces[t] {
            a.add(row, lay.q(f), mesh.face_sign(t, f));
        }
        rhs[row] = (-problem.porosity_rate[t] - coeffs.matrix_source) * geom.triangle_area[t];
    }

    // Fractures: 1D RT0 with outward end fluxes.
    let floor = TANGENTIAL_APERTURE_FLOOR * coeffs.aperture_ref;
    let mut frac_local = Vec::with_capacity(nc);
    for c in 0..nc {
        let eps = problem.aperture[c].max(floor);
        let (k_t, _) = coeffs.fracture_permeabilities(eps)?;
        let len = geom.fracture_length[c];
        let conductivity = eps * k_t;
        if !(conductivity > 0.0) {
            return Err(SimError::InvalidParameter(
                "fracture tangential permeability must be positive".into(),
            ));
        }
        let w = mu / conductivity * len;
        let m = [[w / 3.0, -w / 6.0], [-w / 6.0, w / 3.0]];
        let tau = geom.fracture_tangent[c];
        let gt = dot(body, tau) * len / 2.0;
        frac_local.push((m, [-gt, gt]));
    }
    let add_frac_law = |a: &mut TripletMatrix, rhs: &mut [f64], row: usize, c: usize, end: usize, scale: f64| {
        let (m, g) = &frac_local[c];
        let cell = &mesh.fracture_cells[c];
        for j in 0..2 {
            let ff = cell.ends[j];
            let s = mesh.fracture_faces[ff].outward_sign(c).unwrap();
            a.add(row, lay.qf(ff), scale * m[end][j] * s);
        }
        a.add(row, lay.pf(c), -scale);
        rhs[row] += scale * g[end];
    };
    let end_of = |c: usize, ff: usize| -> usize {
        if mesh.fracture_cells[c].ends[0] == ff {
            0
        } else {
            1
        }
    };

    let mut isolated_points = vec![true; mesh.num_intersections()];
    for (ff, face) in mesh.fracture_faces.iter().enumerate() {
        let row = lay.qf(ff);
        match face.kind {
            FractureFaceKind::Internal { cells } => {
                add_frac_law(&mut a, &mut rhs, row, cells[0], end_of(cells[0], ff), 1.0);
                add_frac_law(&mut a, &mut rhs, row, cells[1], end_of(cells[1], ff), -1.0);
            }
            FractureFaceKind::Tip { cell, tag } => match tag.map(|t| bc[t].flow) {
                Some(FlowBoundary::Pressure(pd)) => {
                    add_frac_law(&mut a, &mut rhs, row, cell, end_of(cell, ff), 1.0);
                    rhs[row] -= pd;
                }
                Some(FlowBoundary::Flux(g)) => {
                    a.add(row, row, 1.0);
                    rhs[row] = g * problem.aperture[cell];
                }
                None => a.add(row, row, 1.0),
            },
            FractureFaceKind::Intersection { cell, point } => {
                let eps = problem.aperture[cell];
                let (_, kappa) = coeffs.fracture_permeabilities(eps)?;
                let beta = 2.0 * kappa / mu;
                if beta > 0.0 {
                    isolated_points[point] = false;
                    add_frac_law(&mut a, &mut rhs, row, cell, end_of(cell, ff), beta);
                    a.add(row, lay.pi(point), beta);
                }
                a.add(row, row, 1.0);
            }
        }
    }

    for (c, cell) in mesh.fracture_cells.iter().enumerate() {
        let row = lay.pf(c);
        for &ff in &cell.ends {
            a.add(row, lay.qf(ff), mesh.fracture_faces[ff].outward_sign(c).unwrap());
        }
        a.add(row, lay.q(cell.plus_face), -1.0);
        a.add(row, lay.q(cell.minus_face), -1.0);
        rhs[row] = (-problem.aperture_rate[c] - problem.aperture[c] * coeffs.fracture_source) * geom.fracture_length[c];
    }

    for (i, point) in mesh.intersections.iter().enumerate() {
        let row = lay.pi(i);
        if isolated_points[i] {
            // Sealed point: its pressure is the mean of the incident cells.
            a.add(row, row, 1.0);
            let w = 1.0 / point.cells.len() as f64;
            for &c in &point.cells {
                a.add(row, lay.pf(c), -w);
            }
        } else {
            for &ff in &point.faces {
                a.add(row, lay.qf(ff), 1.0);
            }
        }
    }

    let x = a.solve(&rhs, STAGE)?;

    let face_flux = x[..lay.nf].to_vec();
    let pressure = x[lay.p(0)..lay.p(nt)].to_vec();
    let fracture_face_flux = x[lay.qf(0)..lay.qf(lay.nff)].to_vec();
    let fracture_pressure = x[lay.pf(0)..lay.pf(nc)].to_vec();
    let intersection_pressure = x[lay.pi(0)..].to_vec();

    let mut exchange = vec![[0.0; 2]; nc];
    let mut side_trace = vec![[0.0; 2]; nc];
    for (c, cell) in mesh.fracture_cells.iter().enumerate() {
        for (k, f) in [cell.plus_face, cell.minus_face].into_iter().enumerate() {
            let t = mesh.faces[f].left;
            let i = GeometryCache::local_face(mesh, t, f);
            let (m, g) = &local[t];
            let mq: f64 = (0..3)
                .map(|j| {
                    let fj = mesh.triangle_faces[t][j];
                    m[i][j] * mesh.face_sign(t, fj) * face_flux[fj]
                })
                .sum();
            side_trace[c][k] = pressure[t] + g[i] - mq;
            exchange[c][k] = face_flux[f] / geom.face_length[f];
        }
        debug_assert!(matches!(
            mesh.faces[cell.plus_face].kind,
            FaceKind::Fracture { side: Side::Plus, .. }
        ));
    }

    let sol = FlowSolution {
        face_flux,
        pressure,
        fracture_face_flux,
        fracture_pressure,
        intersection_pressure,
        exchange,
        side_trace,
    };
    Ok(sol)
}

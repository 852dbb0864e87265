use std::collections::BTreeMap;
use std::f64::consts::PI;

use fracsim_core::darcy::{assemble_and_solve_darcy, FlowProblem, FlowSolution};
use fracsim_core::mesh::build_unit_square_with_fractures;
use fracsim_core::params::{BoundaryConditions, FlowBoundary, FlowCoefficients, SideCondition};
use fracsim_core::{GeometryCache, MixedMesh};

fn pressure_sides(values: &[(&str, FlowBoundary)]) -> BoundaryConditions {
    let sides: BTreeMap<String, SideCondition> = values
        .iter()
        .map(|(name, flow)| {
            (
                name.to_string(),
                SideCondition {
                    flow: *flow,
                    temperature: None,
                    solute: None,
                },
            )
        })
        .collect();
    BoundaryConditions { sides }
}

fn solve(mesh: &MixedMesh, geom: &GeometryCache, rate: &[f64], bc: &BoundaryConditions) -> FlowSolution {
    let coeffs = FlowCoefficients::default();
    let phi = vec![coeffs.porosity_ref; mesh.num_triangles()];
    let eps = vec![coeffs.aperture_ref; mesh.num_fracture_cells()];
    let zc = vec![0.0; mesh.num_fracture_cells()];
    let problem = FlowProblem {
        porosity: &phi,
        aperture: &eps,
        porosity_rate: rate,
        aperture_rate: &zc,
    };
    let resolved = bc.resolve(&mesh.tags).unwrap();
    assemble_and_solve_darcy(mesh, geom, &problem, &resolved, &coeffs).unwrap()
}

/// L2 error of the cell pressures against `sin(pi x) sin(pi y)` sampled at
/// the centroids, for a source matching that pressure.
fn manufactured_error(h: f64) -> f64 {
    let mesh = build_unit_square_with_fractures(&[], h).unwrap();
    let geom = GeometryCache::new(&mesh);
    let exact = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
    // The divergence of the flux equals 2 pi^2 p; the flow solve takes it as
    // minus a porosity rate. Cell averages use the edge-midpoint rule.
    let rate: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| {
            let v = mesh.triangles[t].map(|k| mesh.vertices[k]);
            let avg = (0..3)
                .map(|i| {
                    let (a, b) = (v[i], v[(i + 1) % 3]);
                    exact([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
                })
                .sum::<f64>()
                / 3.0;
            -2.0 * PI * PI * avg
        })
        .collect();
    let bc = pressure_sides(&[
        ("bottom", FlowBoundary::Pressure(0.0)),
        ("top", FlowBoundary::Pressure(0.0)),
        ("left", FlowBoundary::Pressure(0.0)),
        ("right", FlowBoundary::Pressure(0.0)),
    ]);
    let sol = solve(&mesh, &geom, &rate, &bc);
    (0..mesh.num_triangles())
        .map(|t| (sol.pressure[t] - exact(geom.triangle_centroid[t])).powi(2) * geom.triangle_area[t])
        .sum::<f64>()
        .sqrt()
}

#[test]
fn manufactured_pressure_converges_at_first_order_or_better() {
    let hs = [0.2, 0.1, 0.05, 0.025];
    let errors: Vec<f64> = hs.iter().map(|&h| manufactured_error(h)).collect();
    for k in 1..hs.len() {
        let order = (errors[k - 1] / errors[k]).ln() / (hs[k - 1] / hs[k]).ln();
        assert!(
            order >= 0.9,
            "order {order} between h = {} and {}: {errors:?}",
            hs[k - 1],
            hs[k]
        );
    }
}

#[test]
fn channel_flux_is_one() {
    let mesh = build_unit_square_with_fractures(&[], 0.05).unwrap();
    let geom = GeometryCache::new(&mesh);
    let rate = vec![0.0; mesh.num_triangles()];
    let sol = solve(&mesh, &geom, &rate, &BoundaryConditions::default());
    let bottom = mesh.tag_id("bottom").unwrap();
    let top = mesh.tag_id("top").unwrap();
    assert!((sol.inflow_through(&mesh, bottom) - 1.0).abs() < 1e-8);
    assert!((sol.inflow_through(&mesh, top) + 1.0).abs() < 1e-8);
}

#[test]
fn single_fracture_mesh_is_locally_conservative() {
    let mesh = build_unit_square_with_fractures(&[[[0.1, 0.0], [0.9, 0.8]]], 0.05).unwrap();
    let geom = GeometryCache::new(&mesh);
    let coeffs = FlowCoefficients::default();
    let phi = vec![0.2; mesh.num_triangles()];
    let eps = vec![1e-2; mesh.num_fracture_cells()];
    let rate: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| 0.01 * geom.triangle_centroid[t][0])
        .collect();
    let erate = vec![-1e-3; mesh.num_fracture_cells()];
    let problem = FlowProblem {
        porosity: &phi,
        aperture: &eps,
        porosity_rate: &rate,
        aperture_rate: &erate,
    };
    let bc = BoundaryConditions::default().resolve(&mesh.tags).unwrap();
    let sol = assemble_and_solve_darcy(&mesh, &geom, &problem, &bc, &coeffs).unwrap();
    assert!(sol.conservation_residual(&mesh, &geom, &problem, &coeffs) <= 1e-10);
    assert!(sol.jump_law_residual(&problem, &coeffs) <= 1e-10);
    // The fracture conducts: more fluid enters than through the plain channel.
    assert!(sol.inflow_through(&mesh, mesh.tag_id("bottom").unwrap()) > 1.0);
}

#[test]
fn symmetric_data_gives_symmetric_pressure() {
    let segs = [[[0.2, 0.2], [0.8, 0.8]], [[0.2, 0.8], [0.8, 0.2]]];
    let mesh = build_unit_square_with_fractures(&segs, 0.1).unwrap();
    let geom = GeometryCache::new(&mesh);
    let rate = vec![0.0; mesh.num_triangles()];
    let sol = solve(&mesh, &geom, &rate, &BoundaryConditions::default());
    for t in 0..mesh.num_triangles() {
        let c = geom.triangle_centroid[t];
        let mirror = (0..mesh.num_triangles())
            .find(|&s| {
                let d = geom.triangle_centroid[s];
                (d[0] - (1.0 - c[0])).abs() < 1e-9 && (d[1] - c[1]).abs() < 1e-9
            })
            .expect("mesh is mirror symmetric");
        assert!((sol.pressure[t] - sol.pressure[mirror]).abs() < 1e-10);
    }
}

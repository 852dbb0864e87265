//! Heat transport in the matrix and along fractures, with the rock and the
//! water in local thermal equilibrium.

use crate::darcy::FlowSolution;
use crate::error::SimError;
use crate::fv::{implicit_step, stored_amount, ScalarField, ScalarProblem, ScalarStep};
use crate::mesh::{GeometryCache, MixedMesh};
use crate::params::{PhysicalParams, SideCondition};

pub type TemperatureField = ScalarField;

/// Storage per unit measure: `c(phi)` on triangles, `rho_w c_w eps` on fracture cells.
pub fn heat_storage(
    porosity: &[f64],
    aperture: &[f64],
    params: &PhysicalParams,
) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let th = &params.thermal;
    let rho = params.flow.fluid_density;
    let matrix = porosity
        .iter()
        .map(|&p| th.effective_capacity(p, rho))
        .collect::<Result<Vec<_>, _>>()?;
    let fracture = aperture.iter().map(|&e| rho * th.fluid_heat_capacity * e).collect();
    Ok((matrix, fracture))
}

/// Total thermal energy on both dimensions.
pub fn heat_content(
    geom: &GeometryCache,
    porosity: &[f64],
    aperture: &[f64],
    field: &TemperatureField,
    params: &PhysicalParams,
) -> Result<f64, SimError> {
    let (m, f) = heat_storage(porosity, aperture, params)?;
    Ok(stored_amount(geom, &m, &f, field))
}

/// One implicit Euler step of the heat equation. Capacities and
/// conductivities are frozen at `porosity` and `aperture`.
#[allow(clippy::too_many_arguments)]
pub fn advance_heat(
    mesh: &MixedMesh,
    geom: &GeometryCache,
    flow: &FlowSolution,
    old: &TemperatureField,
    porosity: &[f64],
    aperture: &[f64],
    dt: f64,
    bc: &[SideCondition],
    params: &PhysicalParams,
) -> Result<ScalarStep, SimError> {
    params.thermal.validate()?;
    let th = &params.thermal;
    let (matrix_storage, fracture_storage) = heat_storage(porosity, aperture, params)?;
    let matrix_diffusivity = porosity
        .iter()
        .map(|&p| th.effective_conductivity(p))
        .collect::<Result<Vec<_>, _>>()?;
    let fracture_diffusivity: Vec<f64> = aperture.iter().map(|&e| th.fluid_conductivity * e).collect();
    let matrix_source = vec![-th.matrix_heat_sink; mesh.num_triangles()];
    let fracture_source = vec![-th.fracture_heat_sink; mesh.num_fracture_cells()];
    let boundary: Vec<Option<f64>> = bc.iter().map(|s| s.temperature).collect();
    let problem = ScalarProblem {
        matrix_storage: &matrix_storage,
        fracture_storage: &fracture_storage,
        advective_factor: params.flow.fluid_density * th.fluid_heat_capacity,
        matrix_diffusivity: &matrix_diffusivity,
        fracture_diffusivity: &fracture_diffusivity,
        normal_diffusivity: th.fluid_conductivity,
        aperture,
        matrix_source: &matrix_source,
        fracture_source: &fracture_source,
        boundary: &boundary,
    };
    implicit_step(mesh, geom, flow, &problem, old, dt, "heat")
}

//! Solute advection and diffusion, and the chemical state it acts on.

use serde::{Deserialize, Serialize};

use crate::darcy::FlowSolution;
use crate::error::SimError;
use crate::fv::{implicit_step, ScalarField, ScalarProblem, ScalarStep};
use crate::mesh::{GeometryCache, MixedMesh};
use crate::params::{PhysicalParams, SideCondition};

/// Solute and precipitate concentrations, both per unit fluid volume, with the
/// porosity and aperture they live in.
#[derive(Clone, Debug, PartialEq)]
pub struct ChemState {
    pub solute: ScalarField,
    pub matrix_precipitate: Vec<f64>,
    pub fracture_precipitate: Vec<f64>,
    pub porosity: Vec<f64>,
    pub aperture: Vec<f64>,
}

impl ChemState {
    pub fn initial(mesh: &MixedMesh, params: &PhysicalParams) -> Self {
        ChemState {
            solute: ScalarField::uniform(mesh, params.initial.solute),
            matrix_precipitate: vec![params.initial.precipitate; mesh.num_triangles()],
            fracture_precipitate: vec![params.initial.precipitate; mesh.num_fracture_cells()],
            porosity: vec![params.flow.porosity_ref; mesh.num_triangles()],
            aperture: vec![params.flow.aperture_ref; mesh.num_fracture_cells()],
        }
    }

    /// Moles of solute and precipitate, weighted with the given porosity and aperture.
    pub fn moles_with(&self, geom: &GeometryCache, porosity: &[f64], aperture: &[f64]) -> MoleCount {
        let mut m = MoleCount::default();
        for t in 0..porosity.len() {
            let v = porosity[t] * geom.triangle_area[t];
            m.solute += v * self.solute.matrix[t];
            m.precipitate += v * self.matrix_precipitate[t];
        }
        for c in 0..aperture.len() {
            let v = aperture[c] * geom.fracture_length[c];
            m.solute += v * self.solute.fracture[c];
            m.precipitate += v * self.fracture_precipitate[c];
        }
        m
    }

    /// Moles weighted with the state's own porosity and aperture.
    pub fn moles(&self, geom: &GeometryCache) -> MoleCount {
        self.moles_with(geom, &self.porosity, &self.aperture)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoleCount {
    pub solute: f64,
    pub precipitate: f64,
}

impl MoleCount {
    pub fn total(&self) -> f64 {
        self.solute + self.precipitate
    }
}

/// One implicit Euler step of solute advection and diffusion without
/// reaction. Porosity and aperture are frozen at the values in `state`.
pub fn advance_solute_advection(
    mesh: &MixedMesh,
    geom: &GeometryCache,
    flow: &FlowSolution,
    state: &ChemState,
    dt: f64,
    bc: &[SideCondition],
    params: &PhysicalParams,
) -> Result<ScalarStep, SimError> {
    params.chemistry.validate()?;
    let ch = &params.chemistry;
    let matrix_diffusivity: Vec<f64> = state.porosity.iter().map(|&p| p * ch.matrix_diffusivity).collect();
    let fracture_diffusivity: Vec<f64> = state.aperture.iter().map(|&e| e * ch.fracture_diffusivity).collect();
    let matrix_source = vec![0.0; mesh.num_triangles()];
    let fracture_source = vec![0.0; mesh.num_fracture_cells()];
    let boundary: Vec<Option<f64>> = bc.iter().map(|s| s.solute).collect();
    let problem = ScalarProblem {
        matrix_storage: &state.porosity,
        fracture_storage: &state.aperture,
        advective_factor: 1.0,
        matrix_diffusivity: &matrix_diffusivity,
        fracture_diffusivity: &fracture_diffusivity,
        normal_diffusivity: ch.fracture_normal_diffusivity,
        aperture: &state.aperture,
        matrix_source: &matrix_source,
        fracture_source: &fracture_source,
        boundary: &boundary,
    };
    implicit_step(mesh, geom, flow, &problem, &state.solute, dt, "solute transport")
}

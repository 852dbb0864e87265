//! Physical coefficients, initial data and boundary conditions.
//!
//! All `Default` impls reproduce the reference data set used throughout the
//! crate: unit fluid properties, reference porosity 0.2, aperture 1e-2 and
//! fracture permeabilities 1e2.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SimError> {
    if cond {
        Ok(())
    } else {
        Err(SimError::InvalidParameter(msg()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowCoefficients {
    pub viscosity: f64,
    pub fluid_density: f64,
    /// Gravity acceleration, acting along `-y`.
    pub gravity: f64,
    pub matrix_permeability_ref: f64,
    pub porosity_ref: f64,
    pub fracture_tangential_permeability_ref: f64,
    pub fracture_normal_permeability_ref: f64,
    pub aperture_ref: f64,
    pub matrix_source: f64,
    pub fracture_source: f64,
}

impl Default for FlowCoefficients {
    fn default() -> Self {
        FlowCoefficients {
            viscosity: 1.0,
            fluid_density: 1.0,
            gravity: 0.0,
            matrix_permeability_ref: 1.0,
            porosity_ref: 0.2,
            fracture_tangential_permeability_ref: 1e2,
            fracture_normal_permeability_ref: 1e2,
            aperture_ref: 1e-2,
            matrix_source: 0.0,
            fracture_source: 0.0,
        }
    }
}

impl FlowCoefficients {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = [
            self.viscosity,
            self.fluid_density,
            self.gravity,
            self.matrix_permeability_ref,
            self.porosity_ref,
            self.fracture_tangential_permeability_ref,
            self.fracture_normal_permeability_ref,
            self.aperture_ref,
            self.matrix_source,
            self.fracture_source,
        ];
        check(all.iter().all(|v| v.is_finite()), || {
            "non-finite flow coefficient".into()
        })?;
        check(self.viscosity > 0.0, || "viscosity must be positive".into())?;
        check(self.matrix_permeability_ref > 0.0, || {
            "matrix reference permeability must be positive".into()
        })?;
        check(self.porosity_ref > 0.0 && self.porosity_ref < 1.0, || {
            "reference porosity must lie in (0, 1)".into()
        })?;
        check(self.aperture_ref > 0.0, || "reference aperture must be positive".into())?;
        check(self.fracture_tangential_permeability_ref >= 0.0, || {
            "fracture tangential permeability must be nonnegative".into()
        })?;
        check(self.fracture_normal_permeability_ref >= 0.0, || {
            "fracture normal permeability must be nonnegative".into()
        })
    }

    /// `k_ref (phi / phi_ref)^2`.
    pub fn matrix_permeability(&self, porosity: f64) -> Result<f64, SimError> {
        check(porosity > 0.0 && porosity <= 1.0, || {
            format!("porosity {porosity} outside (0, 1]")
        })?;
        let r = porosity / self.porosity_ref;
        Ok(self.matrix_permeability_ref * r * r)
    }

    /// Tangential and normal fracture permeabilities, both scaling with the
    /// squared aperture ratio.
    pub fn fracture_permeabilities(&self, aperture: f64) -> Result<(f64, f64), SimError> {
        check(aperture >= 0.0, || format!("negative aperture {aperture}"))?;
        let r = aperture / self.aperture_ref;
        let s = r * r;
        Ok((
            self.fracture_tangential_permeability_ref * s,
            self.fracture_normal_permeability_ref * s,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalCoefficients {
    pub fluid_heat_capacity: f64,
    pub solid_heat_capacity: f64,
    pub solid_density: f64,
    pub fluid_conductivity: f64,
    pub solid_conductivity: f64,
    /// Matrix heat term. Positive values remove heat.
    pub matrix_heat_sink: f64,
    /// Fracture heat term. Positive values remove heat.
    pub fracture_heat_sink: f64,
}

impl Default for ThermalCoefficients {
    fn default() -> Self {
        ThermalCoefficients {
            fluid_heat_capacity: 1.0,
            solid_heat_capacity: 1.0,
            solid_density: 1.0,
            fluid_conductivity: 1.0,
            solid_conductivity: 0.1,
            matrix_heat_sink: 0.0,
            fracture_heat_sink: 0.0,
        }
    }
}

impl ThermalCoefficients {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("fluid heat capacity", self.fluid_heat_capacity),
            ("solid heat capacity", self.solid_heat_capacity),
            ("solid density", self.solid_density),
            ("fluid conductivity", self.fluid_conductivity),
            ("solid conductivity", self.solid_conductivity),
        ] {
            check(v > 0.0 && v.is_finite(), || format!("{name} must be positive"))?;
        }
        check(
            self.matrix_heat_sink.is_finite() && self.fracture_heat_sink.is_finite(),
            || "non-finite heat source".into(),
        )
    }

    /// Volumetric heat capacity `phi rho_w c_w + (1 - phi) rho_s c_s`.
    pub fn effective_capacity(&self, porosity: f64, fluid_density: f64) -> Result<f64, SimError> {
        check((0.0..=1.0).contains(&porosity), || {
            format!("porosity {porosity} outside [0, 1]")
        })?;
        Ok(porosity * fluid_density * self.fluid_heat_capacity
            + (1.0 - porosity) * self.solid_density * self.solid_heat_capacity)
    }

    /// Geometric mean `Lambda_w^phi Lambda_s^(1 - phi)`.
    pub fn effective_conductivity(&self, porosity: f64) -> Result<f64, SimError> {
        check((0.0..=1.0).contains(&porosity), || {
            format!("porosity {porosity} outside [0, 1]")
        })?;
        check(self.fluid_conductivity > 0.0 && self.solid_conductivity > 0.0, || {
            "conductivities must be positive".into()
        })?;
        Ok(self.fluid_conductivity.powf(porosity) * self.solid_conductivity.powf(1.0 - porosity))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemistryCoefficients {
    pub rate_prefactor: f64,
    pub activation_energy: f64,
    pub equilibrium_concentration: f64,
    pub matrix_molar_volume: f64,
    pub fracture_molar_volume: f64,
    pub matrix_diffusivity: f64,
    pub fracture_diffusivity: f64,
    pub fracture_normal_diffusivity: f64,
}

impl Default for ChemistryCoefficients {
    fn default() -> Self {
        ChemistryCoefficients {
            rate_prefactor: 10.0,
            activation_energy: 4.0,
            equilibrium_concentration: 1.0,
            matrix_molar_volume: 0.5,
            fracture_molar_volume: 2.0,
            matrix_diffusivity: 0.1,
            fracture_diffusivity: 0.1,
            fracture_normal_diffusivity: 0.1,
        }
    }
}

impl ChemistryCoefficients {
    pub fn validate(&self) -> Result<(), SimError> {
        check(self.equilibrium_concentration > 0.0, || {
            "equilibrium concentration must be positive".into()
        })?;
        for (name, v) in [
            ("rate prefactor", self.rate_prefactor),
            ("activation energy", self.activation_energy),
            ("matrix molar volume", self.matrix_molar_volume),
            ("fracture molar volume", self.fracture_molar_volume),
            ("matrix diffusivity", self.matrix_diffusivity),
            ("fracture diffusivity", self.fracture_diffusivity),
            ("fracture normal diffusivity", self.fracture_normal_diffusivity),
        ] {
            check(v >= 0.0 && v.is_finite(), || format!("{name} must be nonnegative"))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    pub temperature: f64,
    pub solute: f64,
    pub precipitate: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        InitialConditions {
            temperature: 0.0,
            solute: 0.0,
            precipitate: 0.3,
        }
    }
}

/// Every coefficient of the model. Initial porosity and aperture are the
/// reference values in [`FlowCoefficients`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    pub flow: FlowCoefficients,
    pub thermal: ThermalCoefficients,
    pub chemistry: ChemistryCoefficients,
    pub initial: InitialConditions,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), SimError> {
        self.flow.validate()?;
        self.thermal.validate()?;
        self.chemistry.validate()?;
        let i = &self.initial;
        check(i.temperature.is_finite(), || "non-finite initial temperature".into())?;
        check(i.solute >= 0.0 && i.solute.is_finite(), || {
            "initial solute must be nonnegative".into()
        })?;
        check(i.precipitate >= 0.0 && i.precipitate.is_finite(), || {
            "initial precipitate must be nonnegative".into()
        })
    }
}

/// Flow condition on a boundary side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowBoundary {
    Pressure(f64),
    /// Outward normal flux per unit length; zero for a wall.
    Flux(f64),
}

/// Conditions attached to one boundary tag. A `None` temperature or solute
/// value means the side only lets the transported quantity leave with the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideCondition {
    pub flow: FlowBoundary,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub solute: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryConditions {
    pub sides: BTreeMap<String, SideCondition>,
}

impl Default for BoundaryConditions {
    /// Inflow from the bottom, outflow at the top, lateral walls.
    fn default() -> Self {
        let mut sides = BTreeMap::new();
        sides.insert(
            "bottom".to_string(),
            SideCondition {
                flow: FlowBoundary::Pressure(1.0),
                temperature: Some(1.5),
                solute: Some(2.0),
            },
        );
        sides.insert(
            "top".to_string(),
            SideCondition {
                flow: FlowBoundary::Pressure(0.0),
                temperature: None,
                solute: None,
            },
        );
        for wall in ["left", "right"] {
            sides.insert(
                wall.to_string(),
                SideCondition {
                    flow: FlowBoundary::Flux(0.0),
                    temperature: None,
                    solute: None,
                },
            );
        }
        BoundaryConditions { sides }
    }
}

impl BoundaryConditions {
    /// Conditions resolved per mesh tag id. Tags without an entry are walls.
    pub fn resolve(&self, tags: &[String]) -> Result<Vec<SideCondition>, SimError> {
        for (name, side) in &self.sides {
            let vals = [
                match side.flow {
                    FlowBoundary::Pressure(v) | FlowBoundary::Flux(v) => v,
                },
                side.temperature.unwrap_or(0.0),
                side.solute.unwrap_or(0.0),
            ];
            check(vals.iter().all(|v| v.is_finite()), || {
                format!("non-finite boundary value on '{name}'")
            })?;
            check(side.solute.is_none_or(|u| u >= 0.0), || {
                format!("negative boundary solute on '{name}'")
            })?;
        }
        Ok(tags
            .iter()
            .map(|t| {
                self.sides.get(t).cloned().unwrap_or(SideCondition {
                    flow: FlowBoundary::Flux(0.0),
                    temperature: None,
                    solute: None,
                })
            })
            .collect())
    }

    /// Sets the temperature on every side that prescribes one.
    pub fn set_inflow_temperature(&mut self, value: f64) {
        for side in self.sides.values_mut() {
            if side.temperature.is_some() {
                side.temperature = Some(value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matrix_permeability_law() {
        let mut f = FlowCoefficients::default();
        assert_abs_diff_eq!(f.matrix_permeability(0.2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.matrix_permeability(0.1).unwrap(), 0.25, epsilon = 1e-15);
        f.matrix_permeability_ref = 2.0;
        assert_abs_diff_eq!(f.matrix_permeability(0.3).unwrap(), 4.5, epsilon = 1e-14);
        assert!(f.matrix_permeability(0.0).is_err());
        assert!(f.matrix_permeability(-0.1).is_err());
    }

    #[test]
    fn fracture_permeability_law() {
        let f = FlowCoefficients::default();
        let (k, kn) = f.fracture_permeabilities(1e-2).unwrap();
        assert_abs_diff_eq!(k, 1e2, epsilon = 1e-10);
        assert_abs_diff_eq!(kn, 1e2, epsilon = 1e-10);
        assert_eq!(f.fracture_permeabilities(0.0).unwrap(), (0.0, 0.0));
        let (k, kn) = f.fracture_permeabilities(0.5e-2).unwrap();
        assert_abs_diff_eq!(k, 25.0, epsilon = 1e-10);
        assert_abs_diff_eq!(kn, 25.0, epsilon = 1e-10);
        assert!(f.fracture_permeabilities(-1e-3).is_err());
    }

    #[test]
    fn capacity_and_conductivity() {
        let t = ThermalCoefficients::default();
        assert_abs_diff_eq!(t.effective_capacity(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(t.effective_capacity(0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(t.effective_capacity(0.2, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let mut t2 = t.clone();
        t2.solid_heat_capacity = 3.0;
        assert_abs_diff_eq!(t2.effective_capacity(0.0, 1.0).unwrap(), 3.0);
        assert!(t.effective_capacity(1.5, 1.0).is_err());

        assert_abs_diff_eq!(t.effective_conductivity(0.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(t.effective_conductivity(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.effective_conductivity(0.5).unwrap(), 0.1f64.sqrt(), epsilon = 1e-6);
        let mut bad = t.clone();
        bad.solid_conductivity = 0.0;
        assert!(bad.effective_conductivity(0.5).is_err());
    }

    #[test]
    fn defaults_validate() {
        PhysicalParams::default().validate().unwrap();
        let mut p = PhysicalParams::default();
        p.flow.viscosity = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn unknown_tags_are_walls() {
        let bc = BoundaryConditions::default();
        let resolved = bc.resolve(&["bottom".into(), "north".into()]).unwrap();
        assert_eq!(resolved[0].flow, FlowBoundary::Pressure(1.0));
        assert_eq!(resolved[1].flow, FlowBoundary::Flux(0.0));
    }
}

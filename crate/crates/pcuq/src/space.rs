//! Uniformly distributed uncertain parameters and their canonical coordinates.

use serde::{Deserialize, Serialize};

use crate::error::UqError;

/// Uniform distribution given by its mean and variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformParameter {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
}

impl UniformParameter {
    pub fn new(name: impl Into<String>, mean: f64, variance: f64) -> Self {
        UniformParameter {
            name: name.into(),
            mean,
            variance,
        }
    }

    /// Half width `sqrt(3 variance)` of the support.
    pub fn half_width(&self) -> f64 {
        (3.0 * self.variance).sqrt()
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width()
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width()
    }

    pub fn to_physical(&self, xi: f64) -> f64 {
        self.lower() + 2.0 * self.half_width() * xi
    }

    pub fn to_canonical(&self, x: f64) -> f64 {
        (x - self.lower()) / (2.0 * self.half_width())
    }
}

/// Product of independent uniform parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSpace {
    pub parameters: Vec<UniformParameter>,
}

impl ParameterSpace {
    pub fn new(parameters: Vec<UniformParameter>) -> Result<Self, UqError> {
        let space = ParameterSpace { parameters };
        space.validate()?;
        Ok(space)
    }

    /// Fracture molar volume, activation energy and inflow temperature.
    pub fn reaction_defaults() -> Self {
        ParameterSpace {
            parameters: vec![
                UniformParameter::new("fracture_molar_volume", 2.0, 0.17),
                UniformParameter::new("activation_energy", 4.0, 0.35),
                UniformParameter::new("inflow_temperature", 1.5, 0.11),
            ],
        }
    }

    pub fn validate(&self) -> Result<(), UqError> {
        if self.parameters.is_empty() {
            return Err(UqError::InvalidInput("parameter space is empty".into()));
        }
        for p in &self.parameters {
            if !(p.variance > 0.0 && p.variance.is_finite() && p.mean.is_finite()) {
                return Err(UqError::InvalidInput(format!(
                    "parameter {}: variance must be positive and finite",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.parameters.len()
    }

    /// Physical values for a canonical point in `[0, 1]^N`.
    pub fn map(&self, xi: &[f64]) -> Result<Vec<f64>, UqError> {
        check_point(xi, self.dim())?;
        Ok(self.parameters.iter().zip(xi).map(|(p, &x)| p.to_physical(x)).collect())
    }

    /// Canonical coordinates of physical values.
    pub fn inverse_map(&self, values: &[f64]) -> Vec<f64> {
        self.parameters
            .iter()
            .zip(values)
            .map(|(p, &v)| p.to_canonical(v))
            .collect()
    }
}

pub(crate) fn check_point(xi: &[f64], dim: usize) -> Result<(), UqError> {
    if xi.len() != dim || !xi.iter().all(|x| (0.0..=1.0).contains(x)) {
        return Err(UqError::OutsideCube(xi.to_vec()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn maps_the_reference_points() {
        let s = ParameterSpace::reaction_defaults();
        assert_eq!(s.map(&[0.5, 0.5, 0.5]).unwrap(), vec![2.0, 4.0, 1.5]);
        assert_abs_diff_eq!(s.map(&[0.0, 0.5, 0.5]).unwrap()[0], 1.285857, epsilon = 1e-6);
        assert_abs_diff_eq!(s.map(&[0.5, 1.0, 0.5]).unwrap()[1], 5.024695, epsilon = 1e-6);
        assert!(s.map(&[1.1, 0.5, 0.5]).is_err());
        assert!(s.map(&[0.5, 0.5]).is_err());
        assert!(s.parameters.iter().all(|p| p.lower() > 0.0));
    }

    #[test]
    fn rejects_degenerate_variances() {
        assert!(ParameterSpace::new(vec![UniformParameter::new("a", 1.0, 0.0)]).is_err());
        assert!(ParameterSpace::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn inverse_map_round_trips(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let s = ParameterSpace::reaction_defaults();
            let back = s.inverse_map(&s.map(&[a, b, c]).unwrap());
            for (x, y) in back.iter().zip([a, b, c]) {
                prop_assert!((x - y).abs() <= 1e-14);
            }
        }
    }
}

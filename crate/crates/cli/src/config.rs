//! JSON run configuration: one scenario plus an optional ensemble section.

use std::fs;
use std::path::{Path, PathBuf};

use fracsim_core::stepper::{MeshSource, ScenarioConfig};
use fracsim_pcuq::{ParameterSpace, RuleKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn default_level() -> usize {
    2
}

fn default_pdf_samples() -> usize {
    20_000
}

fn default_pdf_bins() -> usize {
    fracsim_pcuq::surrogate::DEFAULT_BINS
}

/// Sparse-grid ensemble settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqConfig {
    #[serde(default = "ParameterSpace::reaction_defaults")]
    pub parameters: ParameterSpace,
    #[serde(default)]
    pub rule: RuleKind,
    #[serde(default = "default_level")]
    pub level: usize,
    /// Seed for surrogate sampling.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pdf_samples")]
    pub pdf_samples: usize,
    #[serde(default = "default_pdf_bins")]
    pub pdf_bins: usize,
    /// Fractures whose quarter points get histograms; empty means all.
    #[serde(default)]
    pub pdf_fractures: Vec<usize>,
    /// Canonical point of an extra full run used to measure the surrogate error.
    #[serde(default)]
    pub holdout: Option<Vec<f64>>,
}

impl Default for UqConfig {
    fn default() -> Self {
        UqConfig {
            parameters: ParameterSpace::reaction_defaults(),
            rule: RuleKind::default(),
            level: default_level(),
            seed: 0,
            pdf_samples: default_pdf_samples(),
            pdf_bins: default_pdf_bins(),
            pdf_fractures: Vec::new(),
            holdout: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free text carried into the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub uq: Option<UqConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. Relative mesh and output paths are taken relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MeshSource::File { path: mesh } = &mut config.scenario.mesh {
            if mesh.is_relative() {
                *mesh = base.join(&*mesh);
            }
        }
        if let Some(dir) = &mut config.output_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(uq) = &self.uq {
            uq.parameters.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if uq.level > uq.rule.max_level() {
                return Err(CliError::Config(format!(
                    "level {} too deep for rule {:?}",
                    uq.level, uq.rule
                )));
            }
            if uq.pdf_samples < fracsim_pcuq::surrogate::MIN_PDF_SAMPLES || uq.pdf_bins == 0 {
                return Err(CliError::Config("pdf needs at least 1000 samples and one bin".into()));
            }
            for p in &uq.parameters.parameters {
                // Probe that every name maps onto the scenario.
                let mut probe = self.scenario.clone();
                set_parameter(&mut probe, &p.name, p.mean)?;
            }
            if let Some(h) = &uq.holdout {
                if h.len() != uq.parameters.dim() || !h.iter().all(|x| (0.0..=1.0).contains(x)) {
                    return Err(CliError::Config("holdout must be a point of the unit cube".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Writes one named physical parameter into a scenario.
pub fn set_parameter(scenario: &mut ScenarioConfig, name: &str, value: f64) -> Result<(), CliError> {
    let p = &mut scenario.params;
    let slot = match name {
        "inflow_temperature" => {
            scenario.boundary.set_inflow_temperature(value);
            return Ok(());
        }
        "fracture_molar_volume" => &mut p.chemistry.fracture_molar_volume,
        "matrix_molar_volume" => &mut p.chemistry.matrix_molar_volume,
        "activation_energy" => &mut p.chemistry.activation_energy,
        "rate_prefactor" => &mut p.chemistry.rate_prefactor,
        "equilibrium_concentration" => &mut p.chemistry.equilibrium_concentration,
        "matrix_diffusivity" => &mut p.chemistry.matrix_diffusivity,
        "fracture_diffusivity" => &mut p.chemistry.fracture_diffusivity,
        "initial_precipitate" => &mut p.initial.precipitate,
        "initial_solute" => &mut p.initial.solute,
        other => return Err(CliError::Config(format!("unknown uncertain parameter {other:?}"))),
    };
    *slot = value;
    Ok(())
}

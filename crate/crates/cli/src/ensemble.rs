//! Sparse-grid ensembles: one model run per node, tracked in a resumable
//! manifest, followed by the projection of every output.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use fracsim_core::stepper::{ScenarioConfig, Simulator};
use fracsim_core::MixedMesh;
use fracsim_pcuq::{RuleKind, SparseGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{write_reports, Aggregate, Convergence};
use crate::config::{set_parameter, RunConfig, UqConfig};
use crate::error::CliError;
use crate::output::write_file;
use crate::tracked::{NodeOutputs, TrackedFields, SNAPSHOTS};

/// Maps physical parameter values to tracked outputs.
pub trait Model: Sync {
    fn evaluate(&self, values: &[f64]) -> Result<NodeOutputs, CliError>;
}

/// The coupled simulator with the uncertain parameters written into the
/// scenario. The mesh is built once and shared by all nodes.
pub struct SimulationModel {
    pub scenario: ScenarioConfig,
    pub names: Vec<String>,
    pub mesh: MixedMesh,
}

impl SimulationModel {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let uq = config.uq.clone().unwrap_or_default();
        Ok(SimulationModel {
            scenario: config.scenario.clone(),
            names: uq.parameters.parameters.iter().map(|p| p.name.clone()).collect(),
            mesh: config.scenario.mesh.build()?,
        })
    }
}

impl Model for SimulationModel {
    fn evaluate(&self, values: &[f64]) -> Result<NodeOutputs, CliError> {
        let mut scenario = self.scenario.clone();
        for (name, &v) in self.names.iter().zip(values) {
            set_parameter(&mut scenario, name, v)?;
        }
        let sim = Simulator::with_mesh(scenario, self.mesh.clone())?;
        let early_time = 0.1 * sim.config.final_time * (1.0 - 1e-9);
        let mut out = NodeOutputs::default();
        let last = sim.run_with(|s| {
            if s.time >= early_time && !out.snapshots.contains_key(SNAPSHOTS[0]) {
                out.snapshots.insert(SNAPSHOTS[0].into(), TrackedFields::from_state(s));
            }
            Ok(())
        })?;
        out.snapshots
            .insert(SNAPSHOTS[1].into(), TrackedFields::from_state(&last));
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Pending,
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub index: usize,
    pub xi: Vec<f64>,
    pub parameters: Vec<f64>,
    pub status: NodeStatus,
    /// Output file relative to the manifest directory.
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: RunConfig,
    pub rule: RuleKind,
    pub level: usize,
    pub seed: u64,
    pub nodes: Vec<NodeRecord>,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Writes through a temporary file so a killed run never leaves a torn manifest.
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        write_file(&tmp, &text)?;
        fs::rename(&tmp, path).map_err(|e| CliError::io(format!("replacing {}", path.display()), e))
    }

    pub fn uq(&self) -> &UqConfig {
        self.config.uq.as_ref().expect("manifest configs carry a uq section")
    }
}

/// Command-line overrides for an ensemble.
#[derive(Clone, Debug, Default)]
pub struct UqOptions {
    pub level: Option<usize>,
    pub rule: Option<RuleKind>,
    pub jobs: Option<usize>,
    pub resume: bool,
}

/// Result of a completed ensemble.
pub struct UqOutcome {
    pub manifest: Manifest,
    pub aggregate: Aggregate,
    /// Number of model runs done by this invocation.
    pub executed: usize,
    pub convergence: Option<Convergence>,
}

/// Config with the overrides applied and a uq section filled in.
pub fn effective_config(config: &RunConfig, opts: &UqOptions) -> Result<RunConfig, CliError> {
    let mut c = config.clone();
    let mut uq = c.uq.take().unwrap_or_default();
    if let Some(l) = opts.level {
        uq.level = l;
    }
    if let Some(r) = opts.rule {
        uq.rule = r;
    }
    c.uq = Some(uq);
    c.validate()?;
    Ok(c)
}

fn node_file(index: usize) -> String {
    format!("nodes/node_{index:05}.json")
}

fn read_outputs(path: &Path) -> Result<NodeOutputs, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_outputs(path: &Path, outputs: &NodeOutputs) -> Result<(), CliError> {
    write_file(path, &serde_json::to_string(outputs).expect("outputs serialise"))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))
}

fn fresh_manifest(config: &RunConfig, grid: &SparseGrid) -> Result<Manifest, CliError> {
    let uq = config.uq.as_ref().expect("effective config");
    let nodes = grid
        .nodes
        .iter()
        .enumerate()
        .map(|(index, xi)| {
            Ok(NodeRecord {
                index,
                xi: xi.clone(),
                parameters: uq.parameters.map(xi)?,
                status: NodeStatus::Pending,
                output: node_file(index),
                error: None,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Manifest {
        config_hash: config.hash(),
        config: config.clone(),
        rule: uq.rule,
        level: uq.level,
        seed: uq.seed,
        nodes,
    })
}

/// Runs every node that is not already complete, then aggregates.
pub fn run_uq(
    config: &RunConfig,
    opts: &UqOptions,
    model: &dyn Model,
    mesh: &MixedMesh,
    out_dir: &Path,
) -> Result<UqOutcome, CliError> {
    let config = effective_config(config, opts)?;
    let uq = config.uq.clone().expect("effective config");
    let grid = SparseGrid::new(uq.parameters.dim(), uq.rule, uq.level)?;
    let manifest_path = out_dir.join(Manifest::FILE);
    let mut manifest = fresh_manifest(&config, &grid)?;
    if opts.resume && manifest_path.exists() {
        let old = Manifest::load(&manifest_path)?;
        if old.config_hash != manifest.config_hash {
            return Err(CliError::Config(format!(
                "{} belongs to a different configuration; rerun without --resume",
                manifest_path.display()
            )));
        }
        for (new, old) in manifest.nodes.iter_mut().zip(old.nodes) {
            if old.status == NodeStatus::Ok && out_dir.join(&old.output).exists() {
                *new = old;
            }
        }
    }
    manifest.save(&manifest_path)?;

    let pending: Vec<usize> = manifest
        .nodes
        .iter()
        .filter(|n| n.status != NodeStatus::Ok)
        .map(|n| n.index)
        .collect();
    let executed = pending.len();
    let shared = Mutex::new(manifest);
    let pool = thread_pool(opts.jobs)?;
    pool.install(|| {
        pending.par_iter().try_for_each(|&q| -> Result<(), CliError> {
            let (parameters, output) = {
                let m = shared.lock().expect("manifest lock");
                (m.nodes[q].parameters.clone(), m.nodes[q].output.clone())
            };
            let result = model
                .evaluate(&parameters)
                .and_then(|o| write_outputs(&out_dir.join(&output), &o));
            let mut m = shared.lock().expect("manifest lock");
            match result {
                Ok(()) => {
                    m.nodes[q].status = NodeStatus::Ok;
                    m.nodes[q].error = None;
                }
                Err(e) => {
                    m.nodes[q].status = NodeStatus::Failed;
                    m.nodes[q].error = Some(e.to_string());
                }
            }
            m.save(&manifest_path)
        })
    })?;
    let manifest = shared.into_inner().expect("manifest lock");
    check_complete(&manifest, &manifest_path)?;

    let outputs = load_outputs(&manifest, out_dir)?;
    let aggregate = Aggregate::build(&grid, &outputs)?;
    let convergence = match &uq.holdout {
        Some(xi) => {
            let path = out_dir.join("nodes/holdout.json");
            let truth = if opts.resume && path.exists() {
                read_outputs(&path)?
            } else {
                let o = model.evaluate(&uq.parameters.map(xi)?)?;
                write_outputs(&path, &o)?;
                o
            };
            Some(Convergence::measure(&aggregate, xi, &truth)?)
        }
        None => None,
    };
    write_reports(&aggregate, mesh, &uq, out_dir, convergence.as_ref())?;
    Ok(UqOutcome {
        manifest,
        aggregate,
        executed,
        convergence,
    })
}

fn check_complete(manifest: &Manifest, path: &Path) -> Result<(), CliError> {
    let failed = manifest.nodes.iter().filter(|n| n.status != NodeStatus::Ok).count();
    if failed > 0 {
        return Err(CliError::NodesFailed {
            failed,
            total: manifest.nodes.len(),
            manifest: path.display().to_string(),
        });
    }
    Ok(())
}

fn load_outputs(manifest: &Manifest, dir: &Path) -> Result<Vec<NodeOutputs>, CliError> {
    manifest
        .nodes
        .iter()
        .map(|n| read_outputs(&dir.join(&n.output)))
        .collect()
}

/// Re-aggregates a finished ensemble from its manifest.
pub fn report(manifest_path: &Path) -> Result<Aggregate, CliError> {
    let manifest = Manifest::load(manifest_path)?;
    let dir: PathBuf = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    check_complete(&manifest, manifest_path)?;
    let uq = manifest.uq().clone();
    let grid = SparseGrid::new(uq.parameters.dim(), manifest.rule, manifest.level)?;
    if grid.len() != manifest.nodes.len() {
        return Err(CliError::Config(format!(
            "manifest lists {} nodes, the grid has {}",
            manifest.nodes.len(),
            grid.len()
        )));
    }
    let mesh = manifest.config.scenario.mesh.build()?;
    let outputs = load_outputs(&manifest, &dir)?;
    let aggregate = Aggregate::build(&grid, &outputs)?;
    let holdout = dir.join("nodes/holdout.json");
    let convergence = match (&uq.holdout, holdout.exists()) {
        (Some(xi), true) => Some(Convergence::measure(&aggregate, xi, &read_outputs(&holdout)?)?),
        _ => None,
    };
    write_reports(&aggregate, &mesh, &uq, &dir, convergence.as_ref())?;
    Ok(aggregate)
}

//! One trajectory with snapshot files and a summary.

use std::path::Path;

use fracsim_core::stepper::{Diagnostics, SimState, Simulator};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_string, fmt_f64, vtk_string, write_file};
use crate::tracked::{FractureProfile, TrackedFields, FRACTURE_FIELDS, MATRIX_FIELDS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub time: f64,
    pub matrix: String,
    pub fracture: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub snapshots: Vec<SnapshotEntry>,
    pub diagnostics: Diagnostics,
    /// Smallest fracture permeability at the final time relative to its
    /// initial value, over all fracture cells.
    pub min_fracture_permeability_ratio: Option<f64>,
}

fn write_snapshot(
    sim: &Simulator,
    profile: &FractureProfile,
    state: &SimState,
    index: usize,
    out_dir: &Path,
) -> Result<SnapshotEntry, CliError> {
    let tracked = TrackedFields::from_state(state);
    let fields: Vec<(String, &[f64])> = MATRIX_FIELDS
        .iter()
        .map(|&n| (n.to_string(), tracked.matrix[n].as_slice()))
        .collect();
    let matrix = format!("matrix_{index:04}.vtk");
    let title = format!("matrix fields at t = {}", fmt_f64(state.time));
    write_file(&out_dir.join(&matrix), &vtk_string(&sim.mesh, &title, &fields))?;

    let mut header: Vec<String> = ["fracture", "cell", "arclength"].map(String::from).to_vec();
    header.extend(FRACTURE_FIELDS.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = profile
        .cells
        .iter()
        .map(|&(f, c, s)| {
            let mut row = vec![f.to_string(), c.to_string(), fmt_f64(s)];
            row.extend(FRACTURE_FIELDS.iter().map(|&n| fmt_f64(tracked.fracture[n][c])));
            row
        })
        .collect();
    let fracture = format!("fracture_{index:04}.csv");
    write_file(&out_dir.join(&fracture), &csv_string(&header, &rows)?)?;
    Ok(SnapshotEntry {
        index,
        time: state.time,
        matrix,
        fracture,
    })
}

/// Runs the scenario of `config` and writes its snapshots into `out_dir`.
pub fn run_single(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let sim = Simulator::new(config.scenario.clone())?;
    let profile = FractureProfile::new(&sim.mesh);
    let mut snapshots = Vec::new();
    let mut initial_aperture = None;
    let mut write_error = None;
    let last = sim.run_with(|s| {
        initial_aperture.get_or_insert_with(|| s.chem.aperture.clone());
        match write_snapshot(&sim, &profile, s, snapshots.len(), out_dir) {
            Ok(e) => snapshots.push(e),
            Err(e) => write_error = Some(e),
        }
        Ok(())
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    let flow = &sim.config.params.flow;
    let initial = initial_aperture.unwrap_or_default();
    let mut ratio: Option<f64> = None;
    for (e0, e1) in initial.iter().zip(&last.chem.aperture) {
        let k0 = flow.fracture_permeabilities(*e0)?.0;
        if k0 > 0.0 {
            let r = flow.fracture_permeabilities(*e1)?.0 / k0;
            ratio = Some(ratio.map_or(r, |m| m.min(r)));
        }
    }
    let summary = RunSummary {
        config_hash: config.hash(),
        snapshots,
        diagnostics: last.diagnostics.clone(),
        min_fracture_permeability_ratio: ratio,
    };
    write_file(
        &out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;
    Ok(summary)
}

//! Cellwise projection of ensemble outputs and the report files built from it.

use std::path::Path;

use fracsim_core::MixedMesh;
use fracsim_pcuq::{
    correlation, covariance, pdf_estimate, sobol_indices, surrogate_eval, PCExpansion, Projector, SparseGrid,
};
use serde::Serialize;
use std::sync::Arc;

use crate::config::UqConfig;
use crate::error::CliError;
use crate::output::{csv_string, fmt_f64, vtk_string, write_file};
use crate::tracked::{Domain, FieldSlot, FractureProfile, NodeOutputs};

/// Matrix field pairs whose covariance and correlation are written.
pub const CORRELATED_PAIRS: [(&str, &str); 4] = [
    ("porosity", "pressure"),
    ("porosity", "porosity_precipitate"),
    ("porosity", "temperature"),
    ("porosity_solute", "porosity_precipitate"),
];

/// Fractions of fracture length where histograms are taken.
pub const PDF_POSITIONS: [f64; 2] = [0.25, 0.75];

/// Expansions of every tracked value of an ensemble.
pub struct Aggregate {
    pub projector: Projector,
    pub layout: Vec<FieldSlot>,
    expansions: Vec<PCExpansion>,
}

impl Aggregate {
    pub fn build(grid: &SparseGrid, outputs: &[NodeOutputs]) -> Result<Self, CliError> {
        let first = outputs
            .first()
            .ok_or_else(|| CliError::Config("ensemble has no outputs".into()))?;
        let layout = first.layout();
        if let Some(q) = outputs.iter().position(|o| o.layout() != layout) {
            return Err(CliError::Config(format!(
                "node {q} produced a different set of outputs"
            )));
        }
        let projector = Projector::new(Arc::new(grid.clone()));
        let samples: Vec<Vec<f64>> = outputs.iter().map(NodeOutputs::flatten).collect();
        let expansions = projector.project_fields(&samples)?;
        Ok(Aggregate {
            projector,
            layout,
            expansions,
        })
    }

    pub fn slot(&self, key: &str) -> Option<&FieldSlot> {
        self.layout.iter().find(|s| s.key() == key)
    }

    /// One expansion per cell of the field `snapshot.domain.name`.
    pub fn field(&self, key: &str) -> Option<&[PCExpansion]> {
        self.slot(key).map(|s| &self.expansions[s.offset..s.offset + s.len])
    }

    fn slot_values(&self, slot: &FieldSlot) -> &[PCExpansion] {
        &self.expansions[slot.offset..slot.offset + slot.len]
    }
}

/// Relative L2 error over cells between the surrogate and a full run at a
/// held-out point, per field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub level: usize,
    pub xi: Vec<f64>,
    pub errors: Vec<(String, f64)>,
}

impl Convergence {
    pub fn measure(agg: &Aggregate, xi: &[f64], truth: &NodeOutputs) -> Result<Self, CliError> {
        if truth.layout() != agg.layout {
            return Err(CliError::Config(
                "held-out run produced a different set of outputs".into(),
            ));
        }
        let flat = truth.flatten();
        let mut errors = Vec::new();
        for slot in &agg.layout {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, pc) in agg.slot_values(slot).iter().enumerate() {
                let t = flat[slot.offset + i];
                num += (surrogate_eval(pc, xi)? - t).powi(2);
                den += t * t;
            }
            let err = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
            errors.push((slot.key(), err));
        }
        Ok(Convergence {
            level: agg.projector.grid.level,
            xi: xi.to_vec(),
            errors,
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_f64)
}

/// Writes mean/variance/partial-variance/correlation VTK files, fracture
/// Sobol profiles, histograms and a summary under `out_dir/uq`.
pub fn write_reports(
    agg: &Aggregate,
    mesh: &MixedMesh,
    uq: &UqConfig,
    out_dir: &Path,
    convergence: Option<&Convergence>,
) -> Result<(), CliError> {
    let dir = out_dir.join("uq");
    let names: Vec<&str> = uq.parameters.parameters.iter().map(|p| p.name.as_str()).collect();
    let profile = FractureProfile::new(mesh);
    let mut snapshots: Vec<&str> = agg.layout.iter().map(|s| s.snapshot.as_str()).collect();
    snapshots.dedup();
    let mut seed = uq.seed;

    for snap in snapshots {
        let slots: Vec<&FieldSlot> = agg.layout.iter().filter(|s| s.snapshot == snap).collect();

        let mut cell_fields: Vec<(String, Vec<f64>)> = Vec::new();
        for slot in slots.iter().filter(|s| s.domain == Domain::Matrix) {
            if slot.len != mesh.num_triangles() {
                return Err(CliError::Config(format!("{} does not match the mesh", slot.key())));
            }
            let pcs = agg.slot_values(slot);
            let reports: Vec<_> = pcs.iter().map(sobol_indices).collect();
            cell_fields.push((
                format!("mean_{}", slot.name),
                pcs.iter().map(PCExpansion::mean).collect(),
            ));
            cell_fields.push((
                format!("variance_{}", slot.name),
                pcs.iter().map(PCExpansion::variance).collect(),
            ));
            for (i, p) in names.iter().enumerate() {
                cell_fields.push((
                    format!("first_{}_{p}", slot.name),
                    reports.iter().map(|r| r.partial_first[i]).collect(),
                ));
                cell_fields.push((
                    format!("total_{}_{p}", slot.name),
                    reports.iter().map(|r| r.partial_total[i]).collect(),
                ));
            }
        }
        for (a, b) in CORRELATED_PAIRS {
            let (Some(x), Some(y)) = (
                agg.field(&format!("{snap}.matrix.{a}")),
                agg.field(&format!("{snap}.matrix.{b}")),
            ) else {
                continue;
            };
            let cov = x
                .iter()
                .zip(y)
                .map(|(p, q)| covariance(p, q))
                .collect::<Result<Vec<_>, _>>()?;
            let cor = x
                .iter()
                .zip(y)
                .map(|(p, q)| correlation(p, q).map(|c| c.unwrap_or(f64::NAN)))
                .collect::<Result<Vec<_>, _>>()?;
            cell_fields.push((format!("covariance_{a}_{b}"), cov));
            cell_fields.push((format!("correlation_{a}_{b}"), cor));
        }
        if !cell_fields.is_empty() {
            let refs: Vec<(String, &[f64])> = cell_fields.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect();
            let title = format!("ensemble statistics, {snap} snapshot");
            write_file(
                &dir.join(format!("{snap}_matrix.vtk")),
                &vtk_string(mesh, &title, &refs),
            )?;
        }

        let mut pdf_rows = Vec::new();
        for slot in slots.iter().filter(|s| s.domain == Domain::Fracture) {
            if slot.len != mesh.num_fracture_cells() {
                return Err(CliError::Config(format!("{} does not match the mesh", slot.key())));
            }
            let pcs = agg.slot_values(slot);
            let mut header: Vec<String> = ["fracture", "cell", "arclength", "mean", "variance"]
                .map(String::from)
                .to_vec();
            header.extend(names.iter().map(|p| format!("first_{p}")));
            for i in 0..names.len() {
                for j in i + 1..names.len() {
                    header.push(format!("second_{}_{}", names[i], names[j]));
                }
            }
            header.extend(names.iter().map(|p| format!("total_{p}")));
            let mut rows = Vec::new();
            for &(f, c, s) in &profile.cells {
                let r = sobol_indices(&pcs[c]);
                let idx = r.indices.as_ref();
                let mut row = vec![
                    f.to_string(),
                    c.to_string(),
                    fmt_f64(s),
                    fmt_f64(pcs[c].mean()),
                    fmt_f64(r.variance),
                ];
                row.extend((0..names.len()).map(|i| opt(idx.map(|x| x.first[i]))));
                for i in 0..names.len() {
                    for j in i + 1..names.len() {
                        row.push(opt(idx.map(|x| x.second[i][j])));
                    }
                }
                row.extend((0..names.len()).map(|i| opt(idx.map(|x| x.total[i]))));
                rows.push(row);
            }
            write_file(
                &dir.join(format!("{snap}_fracture_{}_sobol.csv", slot.name)),
                &csv_string(&header, &rows)?,
            )?;

            let fractures: Vec<usize> = if uq.pdf_fractures.is_empty() {
                (0..mesh.fractures.len()).collect()
            } else {
                uq.pdf_fractures.clone()
            };
            for f in fractures {
                for pos in PDF_POSITIONS {
                    let Some(c) = profile.cell_at(f, pos) else {
                        return Err(CliError::Config(format!("no fracture {f} for histograms")));
                    };
                    let h = pdf_estimate(&pcs[c], uq.pdf_samples, uq.pdf_bins, seed)?;
                    seed = seed.wrapping_add(1);
                    for (b, (&count, &density)) in h.counts.iter().zip(&h.density).enumerate() {
                        pdf_rows.push(vec![
                            slot.name.clone(),
                            f.to_string(),
                            fmt_f64(pos),
                            c.to_string(),
                            b.to_string(),
                            fmt_f64(h.bin_centre(b)),
                            count.to_string(),
                            fmt_f64(density),
                        ]);
                    }
                }
            }
        }
        if !pdf_rows.is_empty() {
            let header = [
                "field", "fracture", "position", "cell", "bin", "centre", "count", "density",
            ]
            .map(String::from);
            write_file(&dir.join(format!("{snap}_pdf.csv")), &csv_string(&header, &pdf_rows)?)?;
        }
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        rule: fracsim_pcuq::RuleKind,
        level: usize,
        nodes: usize,
        modes: usize,
        parameters: &'a [fracsim_pcuq::UniformParameter],
        fields: Vec<String>,
    }
    let summary = Summary {
        rule: agg.projector.grid.kind,
        level: agg.projector.grid.level,
        nodes: agg.projector.num_nodes(),
        modes: agg.projector.basis.len(),
        parameters: &uq.parameters.parameters,
        fields: agg.layout.iter().map(FieldSlot::key).collect(),
    };
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;

    if let Some(conv) = convergence {
        let header = ["level", "field", "relative_l2_error"].map(String::from);
        let rows: Vec<Vec<String>> = conv
            .errors
            .iter()
            .map(|(k, e)| vec![conv.level.to_string(), k.clone(), fmt_f64(*e)])
            .collect();
        write_file(&dir.join("convergence.csv"), &csv_string(&header, &rows)?)?;
    }
    Ok(())
}

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use fracsim_cli::ensemble::{report, NodeStatus};
use fracsim_cli::output::vtk_block;
use fracsim_cli::tracked::{NodeOutputs, TrackedFields, FRACTURE_FIELDS, MATRIX_FIELDS, SNAPSHOTS};
use fracsim_cli::{run_single, run_uq, CliError, Manifest, Model, RunConfig, UqConfig, UqOptions};
use fracsim_core::stepper::ScenarioConfig;
use fracsim_core::MixedMesh;
use fracsim_pcuq::{sobol_indices, ParameterSpace, Projector, RuleKind, SparseGrid};

/// Closed-form outputs in canonical coordinates, varying per cell.
struct Analytic {
    space: ParameterSpace,
    triangles: usize,
    fracture_cells: usize,
    fail_at: Option<Vec<f64>>,
    calls: AtomicUsize,
}

impl Analytic {
    fn new(mesh: &MixedMesh) -> Self {
        Analytic {
            space: ParameterSpace::reaction_defaults(),
            triangles: mesh.num_triangles(),
            fracture_cells: mesh.num_fracture_cells(),
            fail_at: None,
            calls: AtomicUsize::new(0),
        }
    }

    fn value(xi: &[f64], field: usize, cell: usize) -> f64 {
        let w = 1.0 + 0.01 * cell as f64;
        match field % 3 {
            0 => xi[0] * xi[1],
            1 => w * xi[2] + xi[0] * xi[0],
            _ => 2.0 - w * xi[1] * xi[2],
        }
    }

    fn outputs(&self, xi: &[f64]) -> NodeOutputs {
        let mut out = NodeOutputs::default();
        for (s, label) in SNAPSHOTS.iter().enumerate() {
            let mut t = TrackedFields {
                time: s as f64,
                ..Default::default()
            };
            for (k, name) in MATRIX_FIELDS.iter().enumerate() {
                t.matrix.insert(
                    name.to_string(),
                    (0..self.triangles).map(|c| Self::value(xi, k + s, c)).collect(),
                );
            }
            for (k, name) in FRACTURE_FIELDS.iter().enumerate() {
                t.fracture.insert(
                    name.to_string(),
                    (0..self.fracture_cells).map(|c| Self::value(xi, k + s, c)).collect(),
                );
            }
            out.snapshots.insert(label.to_string(), t);
        }
        out
    }
}

impl Model for Analytic {
    fn evaluate(&self, values: &[f64]) -> Result<NodeOutputs, CliError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let xi = self.space.inverse_map(values);
        if self
            .fail_at
            .as_deref()
            .is_some_and(|p| p.iter().zip(&xi).all(|(a, b)| (a - b).abs() < 1e-12))
        {
            return Err(CliError::Config("injected failure".into()));
        }
        Ok(self.outputs(&xi))
    }
}

fn uq_config(h: f64) -> RunConfig {
    RunConfig {
        description: Some("workflow test".into()),
        scenario: ScenarioConfig::single_fracture(h),
        output_dir: None,
        uq: Some(UqConfig {
            pdf_samples: 2000,
            pdf_bins: 10,
            seed: 3,
            ..UqConfig::default()
        }),
    }
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn uq_files(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("uq"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p)))
        .collect();
    files.sort();
    files
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[k].to_string()).collect()
}

#[test]
fn level_two_ensemble_lists_31_nodes_and_maps_the_centre() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let dir = tempfile::tempdir().unwrap();
    let out = run_uq(&config, &UqOptions::default(), &model, &mesh, dir.path()).unwrap();
    let manifest = Manifest::load(&dir.path().join(Manifest::FILE)).unwrap();
    assert_eq!(manifest.nodes.len(), 31);
    assert_eq!(out.executed, 31);
    assert!(manifest.nodes.iter().all(|n| n.status == NodeStatus::Ok));
    let centre = manifest.nodes.iter().find(|n| n.xi.iter().all(|&x| x == 0.5)).unwrap();
    for (got, want) in centre.parameters.iter().zip([2.0, 4.0, 1.5]) {
        assert!((got - want).abs() < 1e-14, "{:?}", centre.parameters);
    }
}

#[test]
fn sobol_profiles_match_direct_computation() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let dir = tempfile::tempdir().unwrap();
    run_uq(&config, &UqOptions::default(), &model, &mesh, dir.path()).unwrap();

    // The final snapshot shifts the field pattern by one, so aperture
    // (index 4) becomes 2 - w xi2 xi3 there.
    let grid = Arc::new(SparseGrid::new(3, RuleKind::GaussPatterson, 2).unwrap());
    let projector = Projector::new(grid.clone());
    let text = read(&dir.path().join("uq/final_fracture_aperture_sobol.csv"));
    let cells = column(&text, "cell");
    let names = ["fracture_molar_volume", "activation_energy", "inflow_temperature"];
    for (row, cell) in cells.iter().enumerate() {
        let c: usize = cell.parse().unwrap();
        // The model sees each node after the round trip through physical values.
        let samples: Vec<f64> = grid
            .nodes
            .iter()
            .map(|xi| Analytic::value(&model.space.inverse_map(&model.space.map(xi).unwrap()), 5, c))
            .collect();
        let pc = projector.project(&samples).unwrap();
        let direct = sobol_indices(&pc).indices.unwrap();
        for (i, p) in names.iter().enumerate() {
            let got: f64 = column(&text, &format!("first_{p}"))[row].parse().unwrap();
            assert_eq!(got, direct.first[i]);
            let got: f64 = column(&text, &format!("total_{p}"))[row].parse().unwrap();
            assert_eq!(got, direct.total[i]);
        }
        let s23: f64 = column(&text, &format!("second_{}_{}", names[1], names[2]))[row]
            .parse()
            .unwrap();
        assert_eq!(s23, direct.second[1][2]);
        assert!(direct.first[0].abs() < 1e-12);
        assert!((direct.first[1] - 3.0 / 7.0).abs() < 1e-10);
        assert!((s23 - 1.0 / 7.0).abs() < 1e-10);
    }
}

#[test]
fn resume_skips_finished_nodes_and_reproduces_reports() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let dir = tempfile::tempdir().unwrap();
    run_uq(&config, &UqOptions::default(), &model, &mesh, dir.path()).unwrap();
    let first = uq_files(dir.path());

    let resume = UqOptions {
        resume: true,
        ..UqOptions::default()
    };
    let again = Analytic::new(&mesh);
    let out = run_uq(&config, &resume, &again, &mesh, dir.path()).unwrap();
    assert_eq!(out.executed, 0);
    assert_eq!(again.calls.load(Ordering::SeqCst), 0);
    assert_eq!(uq_files(dir.path()), first);

    fs::remove_file(dir.path().join("nodes/node_00007.json")).unwrap();
    let out = run_uq(&config, &resume, &again, &mesh, dir.path()).unwrap();
    assert_eq!(out.executed, 1);
    assert_eq!(uq_files(dir.path()), first);
}

#[test]
fn resume_refuses_a_different_config() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let dir = tempfile::tempdir().unwrap();
    run_uq(&config, &UqOptions::default(), &model, &mesh, dir.path()).unwrap();
    let mut other = config.clone();
    other.uq.as_mut().unwrap().seed = 4;
    let resume = UqOptions {
        resume: true,
        ..UqOptions::default()
    };
    let err = run_uq(&other, &resume, &model, &mesh, dir.path()).err().unwrap();
    assert!(matches!(err, CliError::Config(_)));
}

#[test]
fn failed_node_is_recorded_and_rerun_on_resume() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let mut broken = Analytic::new(&mesh);
    broken.fail_at = Some(vec![0.5, 0.5, 0.5]);
    let dir = tempfile::tempdir().unwrap();
    let err = run_uq(&config, &UqOptions::default(), &broken, &mesh, dir.path())
        .err()
        .unwrap();
    assert!(
        matches!(
            err,
            CliError::NodesFailed {
                failed: 1,
                total: 31,
                ..
            }
        ),
        "{err}"
    );
    assert_eq!(err.exit_code(), 3);
    let manifest = Manifest::load(&dir.path().join(Manifest::FILE)).unwrap();
    let failed: Vec<_> = manifest
        .nodes
        .iter()
        .filter(|n| n.status == NodeStatus::Failed)
        .collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].error.as_deref().unwrap().contains("injected failure"));

    let fixed = Analytic::new(&mesh);
    let resume = UqOptions {
        resume: true,
        ..UqOptions::default()
    };
    let out = run_uq(&config, &resume, &fixed, &mesh, dir.path()).unwrap();
    assert_eq!(out.executed, 1);
    assert_eq!(fixed.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn same_seed_gives_identical_reports_and_report_rebuilds_them() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let single = UqOptions {
        jobs: Some(1),
        ..UqOptions::default()
    };
    let many = UqOptions {
        jobs: Some(4),
        ..UqOptions::default()
    };
    run_uq(&config, &single, &model, &mesh, a.path()).unwrap();
    run_uq(&config, &many, &model, &mesh, b.path()).unwrap();
    let files = uq_files(a.path());
    assert!(files.iter().any(|(n, _)| n == "early_pdf.csv"));
    assert!(files.iter().any(|(n, _)| n == "final_matrix.vtk"));
    assert_eq!(files, uq_files(b.path()));

    fs::remove_dir_all(a.path().join("uq")).unwrap();
    report(&a.path().join(Manifest::FILE)).unwrap();
    assert_eq!(uq_files(a.path()), files);
}

#[test]
fn matrix_statistics_include_correlations() {
    let config = uq_config(0.2);
    let mesh = config.scenario.mesh.build().unwrap();
    let model = Analytic::new(&mesh);
    let dir = tempfile::tempdir().unwrap();
    run_uq(&config, &UqOptions::default(), &model, &mesh, dir.path()).unwrap();
    let vtk = read(&dir.path().join("uq/early_matrix.vtk"));
    // At the early snapshot porosity (index 4) is w xi3 + xi1^2 and pressure
    // (index 0) is xi1 xi2; they covary through xi1 only.
    let mean = vtk_block(&vtk, "mean_porosity").unwrap();
    assert_eq!(mean.len(), mesh.num_triangles());
    for (c, m) in mean.iter().enumerate() {
        assert!((m - (0.5 * (1.0 + 0.01 * c as f64) + 1.0 / 3.0)).abs() < 1e-12);
    }
    let corr = vtk_block(&vtk, "correlation_porosity_pressure").unwrap();
    assert!(corr.iter().all(|c| *c > 0.0 && *c < 1.0));
    let first = vtk_block(&vtk, "first_porosity_activation_energy").unwrap();
    assert!(first.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn single_run_writes_snapshots_with_evolving_pressure() {
    let mut scenario = ScenarioConfig::single_fracture(0.2);
    scenario.time_step = Some(0.05);
    let config = RunConfig {
        description: None,
        scenario,
        output_dir: None,
        uq: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let summary = run_single(&config, dir.path()).unwrap();
    let times: Vec<f64> = summary.snapshots.iter().map(|s| s.time).collect();
    assert_eq!(times.len(), 3, "{times:?}");
    assert!(times[0] == 0.0 && (times[1] - 0.1).abs() < 1e-12 && (times[2] - 1.0).abs() < 1e-12);
    let (early, last) = (&summary.snapshots[1], &summary.snapshots[2]);
    let p_early = vtk_block(&read(&dir.path().join(&early.matrix)), "pressure").unwrap();
    let p_final = vtk_block(&read(&dir.path().join(&last.matrix)), "pressure").unwrap();
    let change = p_early
        .iter()
        .zip(&p_final)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(change > 1e-6, "pressure did not evolve: {change}");
    let csv_text = read(&dir.path().join(&last.fracture));
    assert_eq!(
        column(&csv_text, "aperture").len(),
        config.scenario.mesh.build().unwrap().num_fracture_cells()
    );
    assert!(summary.min_fracture_permeability_ratio.unwrap() < 1.0);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn without_reaction_porosity_stays_put() {
    let config =
        RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/no_reaction.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_single(&config, dir.path()).unwrap();
    let first = vtk_block(&read(&dir.path().join(&summary.snapshots[0].matrix)), "porosity").unwrap();
    let last = vtk_block(
        &read(&dir.path().join(&summary.snapshots.last().unwrap().matrix)),
        "porosity",
    )
    .unwrap();
    assert_eq!(first, last);
}

fn fracsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracsim")).args(args).output().unwrap()
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing_mesh.json");
    fs::write(
        &missing,
        r#"{"scenario": {"mesh": {"kind": "file", "path": "nowhere.mesh"}}}"#,
    )
    .unwrap();
    let out = fracsim(&[
        "run",
        missing.to_str().unwrap(),
        "-o",
        dir.path().join("a").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(fracsim(&["run", garbled.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        fracsim(&["report", dir.path().join("none.json").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let good = dir.path().join("tiny.json");
    fs::write(
        &good,
        r#"{"scenario": {"mesh": {"kind": "generated", "fractures": [[[0.1, 0.0], [0.9, 0.8]]], "target_h": 0.25},
            "final_time": 0.1, "time_step": 0.05}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("tiny-out");
    let out = fracsim(&["run", good.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("matrix_0002.vtk").exists());
}

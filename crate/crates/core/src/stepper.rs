//! Non-iterative operator splitting: flow, heat, solute transport, reaction and
//! the porosity/aperture update, in that order, once per time step.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::chemistry::{react_cell, update_aperture, update_porosity, POROSITY_MAX, POROSITY_MIN};
use crate::darcy::{assemble_and_solve_darcy, FlowProblem, FlowSolution};
use crate::error::SimError;
use crate::fv::ScalarField;
use crate::heat::advance_heat;
use crate::mesh::{build_unit_square_with_fractures, load_mesh, GeometryCache, MixedMesh, Point};
use crate::params::{BoundaryConditions, PhysicalParams, SideCondition};
use crate::transport::{advance_solute_advection, ChemState, MoleCount};

/// Where the mesh of a scenario comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Generated {
        #[serde(default)]
        fractures: Vec<[Point; 2]>,
        #[serde(default = "default_target_h")]
        target_h: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_target_h() -> f64 {
    0.05
}

fn default_final_time() -> f64 {
    1.0
}

fn default_substep_limit() -> usize {
    100
}

impl MeshSource {
    pub fn build(&self) -> Result<MixedMesh, SimError> {
        Ok(match self {
            MeshSource::Generated { fractures, target_h } => build_unit_square_with_fractures(fractures, *target_h)?,
            MeshSource::File { path } => load_mesh(path)?,
        })
    }
}

/// Everything needed to run one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mesh: MeshSource,
    #[serde(default)]
    pub params: PhysicalParams,
    #[serde(default)]
    pub boundary: BoundaryConditions,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    /// Defaults to a hundredth of the final time.
    #[serde(default)]
    pub time_step: Option<f64>,
    /// Extra snapshot every this many steps; 0 keeps only the mandatory ones.
    #[serde(default)]
    pub output_every: usize,
    /// Reaction sub-steps per cell above which a step is retried with half the step.
    #[serde(default = "default_substep_limit")]
    pub max_reaction_substeps: usize,
}

/// The single immersed fracture from (0.1, 0) to (0.9, 0.8).
pub const SINGLE_FRACTURE: [[Point; 2]; 1] = [[[0.1, 0.0], [0.9, 0.8]]];

/// A representative network of ten fractures with six crossings. None of them
/// reaches the outflow side.
pub const FRACTURE_NETWORK: [[Point; 2]; 10] = [
    [[0.10, 0.10], [0.50, 0.50]],
    [[0.10, 0.40], [0.40, 0.10]],
    [[0.30, 0.60], [0.70, 0.60]],
    [[0.50, 0.40], [0.50, 0.80]],
    [[0.60, 0.20], [0.90, 0.20]],
    [[0.75, 0.05], [0.75, 0.45]],
    [[0.60, 0.65], [0.85, 0.90]],
    [[0.65, 0.85], [0.85, 0.65]],
    [[0.10, 0.70], [0.25, 0.85]],
    [[0.15, 0.55], [0.15, 0.90]],
];

impl ScenarioConfig {
    pub fn with_fractures(fractures: &[[Point; 2]], target_h: f64) -> Self {
        ScenarioConfig {
            mesh: MeshSource::Generated {
                fractures: fractures.to_vec(),
                target_h,
            },
            params: PhysicalParams::default(),
            boundary: BoundaryConditions::default(),
            final_time: default_final_time(),
            time_step: None,
            output_every: 0,
            max_reaction_substeps: default_substep_limit(),
        }
    }

    pub fn single_fracture(target_h: f64) -> Self {
        Self::with_fractures(&SINGLE_FRACTURE, target_h)
    }

    pub fn fracture_network(target_h: f64) -> Self {
        Self::with_fractures(&FRACTURE_NETWORK, target_h)
    }

    pub fn dt(&self) -> f64 {
        self.time_step.unwrap_or(self.final_time / 100.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        let dt = self.dt();
        if !(dt > 0.0) || dt > self.final_time {
            return Err(SimError::InvalidParameter(format!(
                "time step {dt} outside (0, {}]",
                self.final_time
            )));
        }
        if self.max_reaction_substeps == 0 {
            return Err(SimError::InvalidParameter(
                "reaction sub-step limit must be positive".into(),
            ));
        }
        self.params.validate()
    }
}

/// Counters accumulated over a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub reaction_substeps_total: usize,
    pub reaction_substeps_max: usize,
    pub step_halvings: usize,
    pub porosity_clamps: usize,
    pub aperture_clamps: usize,
    pub extrapolation_clamps: usize,
    /// Largest relative solute mole balance defect of any step.
    pub worst_mole_balance: f64,
}

/// All fields at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub flow: FlowSolution,
    pub temperature: ScalarField,
    pub chem: ChemState,
    pub previous_porosity: Vec<f64>,
    pub previous_aperture: Vec<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Flow,
    Heat,
    Transport,
    Reaction,
    Update,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Flow => "flow",
            Stage::Heat => "heat",
            Stage::Transport => "transport",
            Stage::Reaction => "reaction",
            Stage::Update => "update",
        }
    }
}

/// Solute moles before and after a step, both weighted with the
/// beginning-of-step porosity and aperture.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoleBalance {
    pub before: MoleCount,
    pub after: MoleCount,
    /// Moles that entered through the boundary during the step.
    pub inflow: f64,
}

impl MoleBalance {
    pub fn defect(&self) -> f64 {
        self.after.total() - self.before.total() - self.inflow
    }

    pub fn relative_defect(&self) -> f64 {
        let scale = self
            .before
            .total()
            .abs()
            .max(self.after.total().abs())
            .max(self.inflow.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.defect().abs() / scale
        }
    }
}

/// What happened during one call to [`Simulator::step`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub stages: Vec<Stage>,
    pub mole_balance: Vec<MoleBalance>,
    pub halvings: usize,
}

/// `2 phi^n - phi^(n-1)` clamped into the admissible porosity range, and the
/// number of entries that needed clamping.
pub fn extrapolate_porosity(current: &[f64], previous: &[f64]) -> (Vec<f64>, usize) {
    let mut clamps = 0;
    let out = current
        .iter()
        .zip(previous)
        .map(|(&c, &p)| {
            let e = 2.0 * c - p;
            let k = e.clamp(POROSITY_MIN, POROSITY_MAX);
            clamps += usize::from(k != e);
            k
        })
        .collect();
    (out, clamps)
}

fn extrapolate_aperture(current: &[f64], previous: &[f64]) -> (Vec<f64>, usize) {
    let mut clamps = 0;
    let out = current
        .iter()
        .zip(previous)
        .map(|(&c, &p)| {
            let e = 2.0 * c - p;
            clamps += usize::from(e < 0.0);
            e.max(0.0)
        })
        .collect();
    (out, clamps)
}

fn in_stage<T>(stage: Stage, time: f64, r: Result<T, SimError>) -> Result<T, SimError> {
    r.map_err(|e| SimError::Stage {
        stage: stage.name(),
        time,
        source: Box::new(e),
    })
}

/// Maximum number of times a step is halved before giving up.
const MAX_HALVINGS: usize = 12;

/// A scenario with its mesh and geometry built once.
pub struct Simulator {
    pub config: ScenarioConfig,
    pub mesh: MixedMesh,
    pub geom: GeometryCache,
    pub bc: Vec<SideCondition>,
}

impl Simulator {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mesh = config.mesh.build()?;
        Self::with_mesh(config, mesh)
    }

    /// Uses an already built mesh instead of the one described in `config`.
    pub fn with_mesh(config: ScenarioConfig, mesh: MixedMesh) -> Result<Self, SimError> {
        config.validate()?;
        let geom = GeometryCache::new(&mesh);
        let bc = config.boundary.resolve(&mesh.tags)?;
        Ok(Simulator { config, mesh, geom, bc })
    }

    fn solve_flow(
        &self,
        chem: &ChemState,
        porosity_rate: &[f64],
        aperture_rate: &[f64],
    ) -> Result<FlowSolution, SimError> {
        let problem = FlowProblem {
            porosity: &chem.porosity,
            aperture: &chem.aperture,
            porosity_rate,
            aperture_rate,
        };
        assemble_and_solve_darcy(&self.mesh, &self.geom, &problem, &self.bc, &self.config.params.flow)
    }

    /// State at time zero with the initial flow field.
    pub fn initial_state(&self) -> Result<SimState, SimError> {
        let params = &self.config.params;
        let chem = ChemState::initial(&self.mesh, params);
        let zt = vec![0.0; self.mesh.num_triangles()];
        let zc = vec![0.0; self.mesh.num_fracture_cells()];
        let flow = in_stage(Stage::Flow, 0.0, self.solve_flow(&chem, &zt, &zc))?;
        Ok(SimState {
            time: 0.0,
            flow,
            temperature: ScalarField::uniform(&self.mesh, params.initial.temperature),
            previous_porosity: chem.porosity.clone(),
            previous_aperture: chem.aperture.clone(),
            chem,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Advances by `dt`. If some cell needs more reaction sub-steps than
    /// allowed, the interval is covered by two steps of half the length.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepReport), SimError> {
        let mut report = StepReport::default();
        let next = self.step_within(state, dt, 0, &mut report)?;
        Ok((next, report))
    }

    fn step_within(
        &self,
        state: &SimState,
        dt: f64,
        depth: usize,
        report: &mut StepReport,
    ) -> Result<SimState, SimError> {
        match self.single_step(state, dt, report)? {
            Some(next) => Ok(next),
            None if depth < MAX_HALVINGS => {
                report.halvings += 1;
                let mid = self.step_within(state, dt / 2.0, depth + 1, report)?;
                let mut end = self.step_within(&mid, dt / 2.0, depth + 1, report)?;
                end.diagnostics.step_halvings += 1;
                Ok(end)
            }
            None => Err(SimError::Stage {
                stage: Stage::Reaction.name(),
                time: state.time,
                source: Box::new(SimError::InvalidParameter(format!(
                    "reaction needs more than {} sub-steps even after {MAX_HALVINGS} halvings",
                    self.config.max_reaction_substeps
                ))),
            }),
        }
    }

    /// One splitting step. Returns `None` when the reaction sub-step limit is exceeded.
    fn single_step(&self, state: &SimState, dt: f64, report: &mut StepReport) -> Result<Option<SimState>, SimError> {
        let params = &self.config.params;
        let t = state.time;
        let chem = &state.chem;
        let mut diagnostics = state.diagnostics.clone();
        let mut stages = Vec::with_capacity(5);

        // Flow with the porosity rate estimated by extrapolation.
        let (phi_star, c1) = extrapolate_porosity(&chem.porosity, &state.previous_porosity);
        let (eps_star, c2) = extrapolate_aperture(&chem.aperture, &state.previous_aperture);
        diagnostics.extrapolation_clamps += c1 + c2;
        let porosity_rate: Vec<f64> = phi_star.iter().zip(&chem.porosity).map(|(s, p)| (s - p) / dt).collect();
        let aperture_rate: Vec<f64> = eps_star.iter().zip(&chem.aperture).map(|(s, e)| (s - e) / dt).collect();
        let flow = in_stage(Stage::Flow, t, self.solve_flow(chem, &porosity_rate, &aperture_rate))?;
        stages.push(Stage::Flow);

        let heat = in_stage(
            Stage::Heat,
            t,
            advance_heat(
                &self.mesh,
                &self.geom,
                &flow,
                &state.temperature,
                &chem.porosity,
                &chem.aperture,
                dt,
                &self.bc,
                params,
            ),
        )?;
        stages.push(Stage::Heat);
        let temperature = heat.field;

        let solute = in_stage(
            Stage::Transport,
            t,
            advance_solute_advection(&self.mesh, &self.geom, &flow, chem, dt, &self.bc, params),
        )?;
        stages.push(Stage::Transport);

        let mut next_chem = ChemState {
            solute: solute.field,
            ..chem.clone()
        };
        let limit = self.config.max_reaction_substeps;
        let mut worst = 0;
        let mut total = 0;
        let ch = &params.chemistry;
        for (k, w) in next_chem.matrix_precipitate.iter_mut().enumerate() {
            let r = react_cell(next_chem.solute.matrix[k], *w, temperature.matrix[k], dt, ch);
            next_chem.solute.matrix[k] = r.solute;
            *w = r.precipitate;
            worst = worst.max(r.substeps);
            total += r.substeps;
        }
        for (k, w) in next_chem.fracture_precipitate.iter_mut().enumerate() {
            let r = react_cell(next_chem.solute.fracture[k], *w, temperature.fracture[k], dt, ch);
            next_chem.solute.fracture[k] = r.solute;
            *w = r.precipitate;
            worst = worst.max(r.substeps);
            total += r.substeps;
        }
        if worst > limit {
            return Ok(None);
        }
        stages.push(Stage::Reaction);
        diagnostics.reaction_substeps_total += total;
        diagnostics.reaction_substeps_max = diagnostics.reaction_substeps_max.max(worst);

        let balance = MoleBalance {
            before: chem.moles(&self.geom),
            after: next_chem.moles_with(&self.geom, &chem.porosity, &chem.aperture),
            inflow: dt * solute.boundary_inflow,
        };
        diagnostics.worst_mole_balance = diagnostics.worst_mole_balance.max(balance.relative_defect());

        for (k, phi) in next_chem.porosity.iter_mut().enumerate() {
            let (p, clamped) = update_porosity(
                *phi,
                chem.matrix_precipitate[k],
                next_chem.matrix_precipitate[k],
                ch.matrix_molar_volume,
            );
            *phi = p;
            diagnostics.porosity_clamps += usize::from(clamped);
        }
        for (k, eps) in next_chem.aperture.iter_mut().enumerate() {
            let (e, clamped) = update_aperture(
                *eps,
                chem.fracture_precipitate[k],
                next_chem.fracture_precipitate[k],
                ch.fracture_molar_volume,
            );
            *eps = e;
            diagnostics.aperture_clamps += usize::from(clamped);
        }
        stages.push(Stage::Update);
        diagnostics.steps += 1;

        report.stages.extend(stages);
        report.mole_balance.push(balance);
        Ok(Some(SimState {
            time: t + dt,
            flow,
            temperature,
            previous_porosity: chem.porosity.clone(),
            previous_aperture: chem.aperture.clone(),
            chem: next_chem,
            diagnostics,
        }))
    }

    /// Runs to the final time and calls `observe` on every snapshot: the
    /// initial state, the first state at or after a tenth of the final time,
    /// every `output_every`-th step and the final state.
    pub fn run_with(&self, mut observe: impl FnMut(&SimState) -> Result<(), SimError>) -> Result<SimState, SimError> {
        let final_time = self.config.final_time;
        let dt = self.config.dt();
        let tol = 1e-9 * final_time;
        let mut state = self.initial_state()?;
        observe(&state)?;
        let mut early_done = false;
        let mut step = 0usize;
        while state.time < final_time - tol {
            let h = dt.min(final_time - state.time);
            let (next, _) = self.step(&state, h)?;
            state = next;
            step += 1;
            let is_final = state.time >= final_time - tol;
            let is_early = !early_done && state.time >= 0.1 * final_time - tol;
            early_done |= is_early;
            let cadence = self.config.output_every > 0 && step % self.config.output_every == 0;
            if is_final || is_early || cadence {
                observe(&state)?;
            }
        }
        Ok(state)
    }

    /// Runs to the final time and collects the snapshots.
    pub fn run(&self) -> Result<Vec<SimState>, SimError> {
        let mut snapshots = Vec::new();
        self.run_with(|s| {
            snapshots.push(s.clone());
            Ok(())
        })?;
        Ok(snapshots)
    }
}

/// Builds the scenario and runs it.
pub fn run(config: ScenarioConfig) -> Result<Vec<SimState>, SimError> {
    Simulator::new(config)?.run()
}

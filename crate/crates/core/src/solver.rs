//! Displacement-controlled load stepping with the staggered
//! history → phase field → displacement update.

use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_global, element_body_force, element_displacement_system, element_phase_system_with,
    Constraint, DofPattern, ElementSystem, GlobalSystem, MeshGeometry, PhaseReaction,
};
use crate::material::{Lame, MaterialParams};
use crate::mesh::Mesh;
use crate::model::{initial_history, ModelConfig};
use crate::sparse::SymmetricSolver;
use crate::split::{split_energy, Strain2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub absolute: f64,
    pub relative: f64,
    pub max_iterations: usize,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            absolute: 1e-8,
            relative: 1e-6,
            max_iterations: 50,
            divergence_window: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StaggerOrder {
    /// History, then phase field, then displacement.
    #[default]
    PhaseFirst,
    DisplacementFirst,
}

impl FromStr for StaggerOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase_first" => Ok(StaggerOrder::PhaseFirst),
            "displacement_first" => Ok(StaggerOrder::DisplacementFirst),
            other => Err(Error::invalid(format!(
                "unknown order `{other}` (expected phase_first or displacement_first)"
            ))),
        }
    }
}

impl StaggerOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            StaggerOrder::PhaseFirst => "phase_first",
            StaggerOrder::DisplacementFirst => "displacement_first",
        }
    }
}

/// Uniform traction on the boundary edges whose end nodes both lie in `set`.
#[derive(Debug, Clone, PartialEq)]
pub struct Traction {
    pub set: String,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Maximum staggered passes per load step.
    pub passes: usize,
    /// Passes stop early once max |Δd| over a pass falls below this.
    pub pass_tolerance: f64,
    pub order: StaggerOrder,
    /// Integration of the local phase-field terms.
    pub phase_reaction: PhaseReaction,
    /// Stop once the reaction drops below this fraction of its peak.
    pub stop_fraction: f64,
    /// Ramped with the load factor.
    pub body_force: [f64; 2],
    pub tractions: Vec<Traction>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerances: Tolerances::default(),
            passes: 1,
            pass_tolerance: 1e-8,
            order: StaggerOrder::PhaseFirst,
            phase_reaction: PhaseReaction::default(),
            stop_fraction: 0.01,
            body_force: [0.0; 2],
            tractions: Vec::new(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.absolute > 0.0)
            || !(t.relative > 0.0)
            || t.max_iterations == 0
            || t.divergence_window == 0
        {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if self.passes == 0 {
            return Err(Error::invalid("solver.passes must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.stop_fraction) {
            return Err(Error::invalid(format!(
                "stop_fraction must lie in [0, 1), got {}",
                self.stop_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn component(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            other => Err(Error::invalid(format!("unknown axis `{other}`"))),
        }
    }
}

/// A node set with the displacement components held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSet {
    pub set: String,
    pub axes: Vec<Axis>,
}

impl FromStr for FixedSet {
    type Err = Error;

    /// `name:xy`, `name:x` or `name:y`.
    fn from_str(s: &str) -> Result<Self> {
        let (set, axes) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("fixed set `{s}` must look like name:xy")))?;
        if set.is_empty() || axes.is_empty() {
            return Err(Error::invalid(format!(
                "fixed set `{s}` must look like name:xy"
            )));
        }
        let axes = axes
            .chars()
            .map(|c| c.to_string().parse())
            .collect::<Result<Vec<Axis>>>()?;
        Ok(FixedSet {
            set: set.to_string(),
            axes,
        })
    }
}

impl std::fmt::Display for FixedSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:", self.set)?;
        for a in &self.axes {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

/// Linear ramp of a prescribed displacement on one node set.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    pub total_displacement: f64,
    pub steps: usize,
    pub load_set: String,
    pub load_axis: Axis,
    pub fixed: Vec<FixedSet>,
}

impl LoadSchedule {
    pub fn displacement_at(&self, step: usize) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_displacement * step as f64 / self.steps as f64
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !self.total_displacement.is_finite() {
            return Err(Error::invalid("total displacement must be finite"));
        }
        mesh.node_set(&self.load_set)?;
        for f in &self.fixed {
            mesh.node_set(&f.set)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// Nodal displacements, interleaved (x, y).
    pub u: Vec<f64>,
    /// Nodal phase field.
    pub d: Vec<f64>,
    /// History at quadrature points, element-major.
    pub history: Vec<f64>,
    pub step: usize,
    pub load_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub displacement: f64,
    /// kN per unit thickness.
    pub reaction_force: f64,
    pub max_damage: f64,
    pub displacement_iterations: usize,
    pub phase_iterations: usize,
    pub passes: usize,
}

/// Receives every accepted step.
pub trait StepSink {
    fn on_step(&mut self, record: &StepRecord, state: &FieldState, sim: &Simulation) -> Result<()>;
}

impl<F: FnMut(&StepRecord, &FieldState, &Simulation) -> Result<()>> StepSink for F {
    fn on_step(&mut self, record: &StepRecord, state: &FieldState, sim: &Simulation) -> Result<()> {
        self(record, state, sim)
    }
}

#[derive(Debug)]
pub struct RunFailure {
    pub step: usize,
    pub error: Error,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    /// Stopped because the reaction collapsed below the stop fraction.
    pub terminated_early: bool,
    pub failure: Option<RunFailure>,
}

struct Monitor {
    tol: Tolerances,
    field: &'static str,
    reference: Option<f64>,
    previous: f64,
    increases: usize,
}

impl Monitor {
    fn new(tol: Tolerances, field: &'static str) -> Self {
        Monitor {
            tol,
            field,
            reference: None,
            previous: f64::INFINITY,
            increases: 0,
        }
    }

    /// Ok(true) once converged; errors on divergence or exhaustion.
    fn check(&mut self, iteration: usize, norm: f64) -> Result<bool> {
        if !norm.is_finite() {
            return Err(Error::Diverged {
                field: self.field,
                iteration,
                residual: norm,
            });
        }
        let reference = *self.reference.get_or_insert(norm);
        if norm <= self.tol.absolute || norm <= self.tol.relative * reference {
            return Ok(true);
        }
        if norm > self.previous {
            self.increases += 1;
            if self.increases >= self.tol.divergence_window {
                return Err(Error::Diverged {
                    field: self.field,
                    iteration,
                    residual: norm,
                });
            }
        } else {
            self.increases = 0;
        }
        self.previous = norm;
        if iteration >= self.tol.max_iterations {
            return Err(Error::NotConverged {
                field: self.field,
                iterations: iteration,
                residual: norm,
            });
        }
        Ok(false)
    }
}

pub struct Simulation {
    geometry: MeshGeometry,
    mesh: Mesh,
    lame: Lame,
    material: MaterialParams,
    config: ModelConfig,
    schedule: LoadSchedule,
    options: SolverOptions,
    u_pattern: DofPattern,
    d_pattern: DofPattern,
    fixed_dofs: Vec<usize>,
    loaded_dofs: Vec<usize>,
    external: Vec<f64>,
    state: FieldState,
    u_solver: Mutex<SymmetricSolver>,
    d_solver: Mutex<SymmetricSolver>,
}

impl Simulation {
    pub fn new(
        mesh: Mesh,
        material: MaterialParams,
        config: ModelConfig,
        schedule: LoadSchedule,
        options: SolverOptions,
    ) -> Result<Self> {
        material.validate()?;
        config.validate()?;
        options.validate()?;
        mesh.validate()?;
        schedule.validate(&mesh)?;
        let geometry = MeshGeometry::new(&mesh)?;
        let lame = material.in_plane_lame()?;
        let n = mesh.num_nodes();
        let u_pattern = DofPattern::new(geometry.connectivity(), n, 2);
        let d_pattern = DofPattern::new(geometry.connectivity(), n, 1);

        let comp = schedule.load_axis.component();
        let mut loaded_dofs: Vec<usize> = mesh
            .node_set(&schedule.load_set)?
            .iter()
            .map(|&i| 2 * i + comp)
            .collect();
        loaded_dofs.sort_unstable();
        loaded_dofs.dedup();
        let mut fixed_dofs = Vec::new();
        for f in &schedule.fixed {
            for &node in mesh.node_set(&f.set)? {
                for a in &f.axes {
                    let dof = 2 * node + a.component();
                    if loaded_dofs.binary_search(&dof).is_ok() {
                        return Err(Error::invalid(format!(
                            "node {node} is both loaded and fixed in {}",
                            a.as_char()
                        )));
                    }
                    fixed_dofs.push(dof);
                }
            }
        }
        fixed_dofs.sort_unstable();
        fixed_dofs.dedup();

        let mut external = vec![0.0; 2 * n];
        if options.body_force != [0.0; 2] {
            for e in 0..geometry.num_elements() {
                let f = element_body_force(geometry.element(e), options.body_force);
                for (a, &node) in geometry.connectivity()[e].iter().enumerate() {
                    external[2 * node] += f[2 * a];
                    external[2 * node + 1] += f[2 * a + 1];
                }
            }
        }
        for t in &options.tractions {
            let members = mesh.node_set(&t.set)?;
            let mut in_set = vec![false; n];
            for &i in members {
                in_set[i] = true;
            }
            for conn in &mesh.elements {
                for a in 0..4 {
                    let (p, q) = (conn[a], conn[(a + 1) % 4]);
                    if in_set[p] && in_set[q] {
                        let len = (mesh.nodes[q][0] - mesh.nodes[p][0])
                            .hypot(mesh.nodes[q][1] - mesh.nodes[p][1]);
                        for node in [p, q] {
                            external[2 * node] += 0.5 * len * t.value[0];
                            external[2 * node + 1] += 0.5 * len * t.value[1];
                        }
                    }
                }
            }
        }

        let h0 = initial_history(&config, material.gc);
        let state = FieldState {
            u: vec![0.0; 2 * n],
            d: vec![0.0; n],
            history: vec![h0; geometry.num_points()],
            step: 0,
            load_factor: 0.0,
        };
        Ok(Simulation {
            geometry,
            mesh,
            lame,
            material,
            config,
            schedule,
            options,
            u_pattern,
            d_pattern,
            fixed_dofs,
            loaded_dofs,
            external,
            state,
            u_solver: Mutex::new(SymmetricSolver::new()),
            d_solver: Mutex::new(SymmetricSolver::new()),
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn geometry(&self) -> &MeshGeometry {
        &self.geometry
    }

    pub fn schedule(&self) -> &LoadSchedule {
        &self.schedule
    }

    pub fn material(&self) -> &MaterialParams {
        &self.material
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// Strains at quadrature points for the current displacement.
    pub fn strains(&self) -> Vec<Strain2D> {
        self.geometry.strains(&self.state.u)
    }

    /// Tensile energy ψ₀⁺ at quadrature points for the current displacement.
    pub fn tensile_energy(&self) -> Vec<f64> {
        self.strains()
            .iter()
            .map(|e| split_energy(e, &self.lame).psi_plus)
            .collect()
    }

    /// H ← max(H, ψ₀⁺(ε)) at every quadrature point.
    pub fn update_history(history: &mut [f64], strains: &[Strain2D], lame: &Lame) {
        for (h, e) in history.iter_mut().zip(strains) {
            let psi = split_energy(e, lame).psi_plus;
            if psi > *h {
                *h = psi;
            }
        }
    }

    fn refresh_history(&self, state: &mut FieldState) {
        let strains = self.geometry.strains(&state.u);
        Self::update_history(&mut state.history, &strains, &self.lame);
    }

    fn displacement_global(&self, state: &FieldState) -> Result<GlobalSystem> {
        let d_points = self.geometry.phase_at_points(&state.d);
        let k = self.config.residual_stiffness;
        let systems: Vec<ElementSystem> = (0..self.geometry.num_elements())
            .into_par_iter()
            .map(|e| {
                let ue = self.geometry.gather_vector(e, &state.u);
                let de: [f64; 4] = d_points[4 * e..4 * e + 4].try_into().unwrap();
                element_displacement_system(self.geometry.element(e), &ue, &de, &self.lame, k)
                    .into()
            })
            .collect();
        let mut g = assemble_global(&self.u_pattern, &systems)?;
        let lf = state.load_factor;
        if lf != 0.0 {
            for (r, f) in g.residual.iter_mut().zip(&self.external) {
                *r -= lf * f;
            }
        }
        Ok(g)
    }

    fn phase_global(&self, state: &FieldState) -> Result<GlobalSystem> {
        let gc = self.material.gc;
        let reaction = self.options.phase_reaction;
        let systems: Vec<ElementSystem> = (0..self.geometry.num_elements())
            .into_par_iter()
            .map(|e| {
                let de = self.geometry.gather_scalar(e, &state.d);
                let he: [f64; 4] = state.history[4 * e..4 * e + 4].try_into().unwrap();
                element_phase_system_with(
                    self.geometry.element(e),
                    &de,
                    &he,
                    &self.config,
                    gc,
                    reaction,
                )
                .into()
            })
            .collect();
        assemble_global(&self.d_pattern, &systems)
    }

    /// Newton on the displacement subproblem with `target` on the loaded
    /// dofs. Returns (iterations, reaction force).
    pub fn solve_displacement(&self, state: &mut FieldState, target: f64) -> Result<(usize, f64)> {
        let mut monitor = Monitor::new(self.options.tolerances, "displacement");
        let mut iteration = 0;
        loop {
            let global = self.displacement_global(state)?;
            let mut constraints: Vec<Constraint> = self
                .fixed_dofs
                .iter()
                .map(|&dof| Constraint {
                    dof,
                    value: -state.u[dof],
                })
                .collect();
            constraints.extend(self.loaded_dofs.iter().map(|&dof| Constraint {
                dof,
                value: target - state.u[dof],
            }));
            let lifted = constraints.iter().any(|c| c.value != 0.0);
            let (matrix, rhs, res) = global.constrain_in_place(&constraints)?;
            if !lifted && monitor.check(iteration, res)? {
                let reaction = self.loaded_dofs.iter().map(|&i| global.residual[i]).sum();
                return Ok((iteration, reaction));
            }
            if lifted && monitor.reference.is_none() {
                monitor.reference = Some(res);
            }
            let full = self.u_solver.lock().unwrap().solve(&matrix, &rhs)?;
            for (u, du) in state.u.iter_mut().zip(&full) {
                *u += du;
            }
            iteration += 1;
        }
    }

    /// Newton on the phase-field subproblem with the history held fixed.
    /// Nodes pinned at a bound with the residual pushing outward are
    /// removed from the update. Returns the iteration count.
    pub fn solve_phase(&self, state: &mut FieldState) -> Result<usize> {
        let mut monitor = Monitor::new(self.options.tolerances, "phase field");
        let mut iteration = 0;
        loop {
            let global = self.phase_global(state)?;
            let mut active = Vec::new();
            let mut free_sq = 0.0;
            for (i, (&d, &r)) in state.d.iter().zip(&global.residual).enumerate() {
                if (d <= 0.0 && r > 0.0) || (d >= 1.0 && r < 0.0) {
                    active.push(Constraint { dof: i, value: 0.0 });
                } else {
                    free_sq += r * r;
                }
            }
            if monitor.check(iteration, free_sq.sqrt())? {
                return Ok(iteration);
            }
            let (matrix, rhs, _) = global.constrain_in_place(&active)?;
            let full = self.d_solver.lock().unwrap().solve(&matrix, &rhs)?;
            for (d, dd) in state.d.iter_mut().zip(&full) {
                *d = (*d + dd).clamp(0.0, 1.0);
            }
            iteration += 1;
        }
    }

    /// One load step to `target`; commits the new state on success.
    pub fn staggered_step(&mut self, target: f64) -> Result<StepRecord> {
        let mut next = self.state.clone();
        next.step += 1;
        next.load_factor = if self.schedule.total_displacement != 0.0 {
            target / self.schedule.total_displacement
        } else {
            0.0
        };
        let (mut u_its, mut d_its, mut passes, mut reaction) = (0, 0, 0, 0.0);
        for _ in 0..self.options.passes {
            let d_before = next.d.clone();
            match self.options.order {
                StaggerOrder::PhaseFirst => {
                    self.refresh_history(&mut next);
                    d_its += self.solve_phase(&mut next)?;
                    let (its, r) = self.solve_displacement(&mut next, target)?;
                    u_its += its;
                    reaction = r;
                }
                StaggerOrder::DisplacementFirst => {
                    let (its, r) = self.solve_displacement(&mut next, target)?;
                    u_its += its;
                    reaction = r;
                    self.refresh_history(&mut next);
                    d_its += self.solve_phase(&mut next)?;
                }
            }
            passes += 1;
            let change = next
                .d
                .iter()
                .zip(&d_before)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if passes > 1 && change < self.options.pass_tolerance {
                break;
            }
        }
        if !reaction.is_finite() {
            return Err(Error::Diverged {
                field: "displacement",
                iteration: u_its,
                residual: reaction,
            });
        }
        let record = StepRecord {
            step: next.step,
            displacement: target,
            reaction_force: reaction,
            max_damage: next.d.iter().fold(0.0f64, |m, &v| m.max(v)),
            displacement_iterations: u_its,
            phase_iterations: d_its,
            passes,
        };
        self.state = next;
        Ok(record)
    }

    /// Run the whole schedule, stopping early once the structure has failed.
    pub fn run(&mut self, sink: &mut dyn StepSink) -> Result<RunOutcome> {
        let mut records = Vec::with_capacity(self.schedule.steps);
        let mut peak = 0.0f64;
        for n in 1..=self.schedule.steps {
            let target = self.schedule.displacement_at(n);
            let record = match self.staggered_step(target) {
                Ok(r) => r,
                Err(error) if error.is_solver_failure() => {
                    return Ok(RunOutcome {
                        records,
                        terminated_early: false,
                        failure: Some(RunFailure { step: n, error }),
                    });
                }
                Err(e) => return Err(e),
            };
            sink.on_step(&record, &self.state, self)?;
            records.push(record);
            let f = record.reaction_force.abs();
            peak = peak.max(f);
            if peak > 0.0 && f < self.options.stop_fraction * peak {
                return Ok(RunOutcome {
                    records,
                    terminated_early: true,
                    failure: None,
                });
            }
        }
        Ok(RunOutcome {
            records,
            terminated_early: false,
            failure: None,
        })
    }
}

/// Build a simulation and run its schedule.
pub fn run_simulation(
    mesh: Mesh,
    material: MaterialParams,
    config: ModelConfig,
    schedule: LoadSchedule,
    options: SolverOptions,
    sink: &mut dyn StepSink,
) -> Result<RunOutcome> {
    Simulation::new(mesh, material, config, schedule, options)?.run(sink)
}

/// No-op sink.
pub struct Discard;

impl StepSink for Discard {
    fn on_step(&mut self, _: &StepRecord, _: &FieldState, _: &Simulation) -> Result<()> {
        Ok(())
    }
}

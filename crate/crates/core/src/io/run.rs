//! Config-driven simulation runs and their on-disk artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::failure::{failure_stress, FailureEstimate, FailureInputs};
use crate::io::config::{format_config, RunConfig};
use crate::io::csv::{write_curve, CurveRecord};
use crate::io::vtk::write_vtk;
use crate::mesh::{min_element_size, Mesh};
use crate::solver::{Axis, FieldState, RunOutcome, Simulation, StepRecord};

pub const CURVE_FILE: &str = "curve.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.cfg";

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub outcome: RunOutcome,
    /// Step with the largest reaction force.
    pub peak: Option<StepRecord>,
    /// Closed-form failure load, when the mesh carries a crack.
    pub estimate: Option<FailureEstimate>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn solver_failed(&self) -> bool {
        self.outcome.failure.is_some()
    }
}

/// Build the mesh and simulation, validating everything that can be
/// checked without solving.
pub fn prepare(config: &RunConfig) -> Result<Simulation> {
    let mesh = config.mesh.build()?;
    Simulation::new(
        mesh,
        config.material,
        config.model,
        config.schedule.clone(),
        config.solver.clone(),
    )
}

/// Failure estimate for the crack stored in the mesh seam, if any.
pub fn crack_estimate(
    config: &RunConfig,
    mesh: &Mesh,
    load_axis: Axis,
) -> Option<Result<FailureEstimate>> {
    let seam = mesh.seam.as_ref()?;
    let a0 = (seam.end[0] - seam.start[0]).hypot(seam.end[1] - seam.start[1]);
    let (lo, hi) = mesh.bounds();
    // Load is carried across the extent normal to the load axis.
    let width = match load_axis {
        Axis::Y => hi[0] - lo[0],
        Axis::X => hi[1] - lo[1],
    };
    Some(min_element_size(mesh).and_then(|h| {
        let mut inputs = FailureInputs::new(config.material, config.model, h, a0);
        inputs.specimen_width = width;
        failure_stress(&inputs)
    }))
}

fn peak_of(records: &[StepRecord]) -> Option<StepRecord> {
    records.iter().copied().reduce(|best, r| {
        if r.reaction_force > best.reaction_force {
            r
        } else {
            best
        }
    })
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:06}.vtk"))
}

/// Validate, simulate and write artifacts into `config.output.directory`.
///
/// Nothing is written if validation fails. A solver failure still writes the
/// curve up to the last accepted step and a summary; it is reported through
/// `RunReport::outcome.failure`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_prepared(config, prepare(config)?)
}

/// Like `run`, for a simulation already built by `prepare(config)`.
pub fn run_prepared(config: &RunConfig, mut sim: Simulation) -> Result<RunReport> {
    let estimate = crack_estimate(config, sim.mesh(), config.schedule.load_axis);

    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let config_path = dir.join(CONFIG_FILE);
    std::fs::write(&config_path, format_config(config))?;
    files.push(config_path);

    let interval = if config.output.formats.vtk {
        config.output.snapshot_interval
    } else {
        0
    };
    let mut snapshots = Vec::new();
    if interval > 0 {
        let p = snapshot_path(&dir, 0);
        write_vtk(sim.mesh(), &sim.state().u, &sim.state().d, &p)?;
        snapshots.push(p);
    }
    let mut last_written = 0;
    let outcome = {
        let mut sink = |r: &StepRecord, state: &FieldState, s: &Simulation| -> Result<()> {
            if interval > 0 && r.step.is_multiple_of(interval) {
                let p = snapshot_path(&dir, r.step);
                write_vtk(s.mesh(), &state.u, &state.d, &p)?;
                snapshots.push(p);
                last_written = r.step;
            }
            Ok(())
        };
        sim.run(&mut sink)?
    };
    // Always keep the final accepted state.
    if interval > 0 && sim.state().step != last_written {
        let p = snapshot_path(&dir, sim.state().step);
        write_vtk(sim.mesh(), &sim.state().u, &sim.state().d, &p)?;
        snapshots.push(p);
    }
    files.extend(snapshots);

    if config.output.formats.csv {
        let rows: Vec<CurveRecord> = outcome.records.iter().map(CurveRecord::from).collect();
        let p = dir.join(CURVE_FILE);
        write_curve(&p, &rows)?;
        files.push(p);
    }

    let peak = peak_of(&outcome.records);
    let summary = format_summary(config, &outcome, peak.as_ref(), estimate.as_ref());
    let p = dir.join(SUMMARY_FILE);
    std::fs::write(&p, summary)?;
    files.push(p);

    Ok(RunReport {
        output_dir: dir,
        outcome,
        peak,
        estimate: estimate.and_then(|e| e.ok()),
        files,
    })
}

fn format_summary(
    config: &RunConfig,
    outcome: &RunOutcome,
    peak: Option<&StepRecord>,
    estimate: Option<&Result<FailureEstimate>>,
) -> String {
    let mut s = String::new();
    if let Some(src) = &config.source {
        let _ = writeln!(s, "config: {}", src.display());
    }
    let m = &config.model;
    let _ = writeln!(
        s,
        "model: xi={} length_scale={} residual_stiffness={} supplemental_threshold={}",
        m.density.xi(),
        m.length_scale,
        m.residual_stiffness,
        m.supplemental_threshold
    );
    let mat = &config.material;
    let _ = writeln!(
        s,
        "material: youngs_modulus={} poisson_ratio={} gc={} mode={}",
        mat.youngs_modulus,
        mat.poisson_ratio,
        mat.gc,
        mat.mode.as_str()
    );
    let _ = writeln!(
        s,
        "steps_completed: {} of {}",
        outcome.records.len(),
        config.schedule.steps
    );
    let status = match (&outcome.failure, outcome.terminated_early) {
        (Some(f), _) => format!("solver_failure at step {}: {}", f.step, f.error),
        (None, true) => "terminated_early (reaction collapsed)".to_string(),
        (None, false) => "completed".to_string(),
    };
    let _ = writeln!(s, "status: {status}");
    match peak {
        Some(p) => {
            let _ = writeln!(s, "peak_reaction_force: {}", p.reaction_force);
            let _ = writeln!(s, "displacement_at_peak: {}", p.displacement);
            let _ = writeln!(s, "step_at_peak: {}", p.step);
            let _ = writeln!(s, "max_damage_at_peak: {}", p.max_damage);
        }
        None => {
            let _ = writeln!(s, "peak_reaction_force: none");
        }
    }
    match estimate {
        None => {}
        Some(Err(e)) => {
            let _ = writeln!(s, "failure_estimate: unavailable ({e})");
        }
        Some(Ok(est)) => {
            let _ = writeln!(s, "estimate_gc_eff: {}", est.gc_eff);
            let _ = writeln!(s, "estimate_a0_eff: {}", est.a0_eff);
            let _ = writeln!(s, "estimate_sigma_c: {}", est.sigma_c);
            let _ = writeln!(s, "estimate_sigma_y0b: {}", est.sigma_y0b);
            let _ = writeln!(s, "estimate_eta: {}", est.eta);
            let _ = writeln!(s, "estimate_sigma_y0c: {}", est.sigma_y0c);
            let _ = writeln!(s, "estimate_load: {}", est.load_estimate);
            if let Some(p) = peak {
                let _ = writeln!(
                    s,
                    "peak_over_estimate: {}",
                    p.reaction_force / est.load_estimate
                );
                let _ = writeln!(
                    s,
                    "estimate_is_lower_bound: {}",
                    est.load_estimate <= p.reaction_force
                );
            }
        }
    }
    s
}

/// Map an error to the CLI exit status: 2 config, 3 solver, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 4,
        e if e.is_solver_failure() => 3,
        _ => 2,
    }
}

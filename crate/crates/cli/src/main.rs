//! `pfrac`: command-line front end for the phase-field fracture library.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use pfrac_core::analytic1d::{
    critical_quantities, homogeneous_curve, nonhomogeneous_profile, ProfileOptions,
};
use pfrac_core::failure::{failure_stress, FailureInputs, FractureMode};
use pfrac_core::io::{exit_code, prepare, read_config, run_prepared, RunConfig, RunReport};
use pfrac_core::model::{critical_strain_energy, initial_history};
use pfrac_core::{AnalysisMode, CrackDensity, Error, MaterialParams, ModelConfig, Result};

/// Element size used by `--fine-mesh`.
const FINE_MESH_H: f64 = 0.005;

#[derive(Parser)]
#[command(
    name = "pfrac",
    version,
    about = "Phase-field brittle fracture: 1D analysis, failure estimates and FEM runs"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical quantities and homogeneous (strain, stress, damage) sweeps of a 1D bar.
    #[command(name = "analyze-1d")]
    Analyze1d(Analyze1d),
    /// Effective G_c and a0 and the mode-I failure stress estimate.
    EstimateFailure(EstimateFailure),
    /// Run staggered FEM simulations from config files.
    Simulate(Simulate),
}

#[derive(Args)]
struct MaterialArgs {
    /// Crack density family: 0 (AT2), 1 (AT1) or 2.
    #[arg(long)]
    xi: i64,
    /// Young's modulus E in kN/mm².
    #[arg(long, default_value_t = 210.0)]
    youngs_modulus: f64,
    #[arg(long, default_value_t = 0.3)]
    poisson_ratio: f64,
    /// Critical energy release rate in kN/mm.
    #[arg(long)]
    gc: f64,
    /// Length scale l in mm.
    #[arg(long)]
    length_scale: f64,
    #[arg(long, value_enum, default_value_t = Mode::PlaneStrain)]
    mode: Mode,
    /// Add the H_c = G_c/(2l) threshold (xi = 0 only).
    #[arg(long)]
    supplemental_threshold: bool,
}

impl MaterialArgs {
    fn build(&self) -> Result<(MaterialParams, ModelConfig)> {
        let material = MaterialParams::new(
            self.youngs_modulus,
            self.poisson_ratio,
            self.gc,
            self.mode.into(),
        )?;
        let config = ModelConfig::new(CrackDensity::from_xi(self.xi)?, self.length_scale)?
            .with_supplemental_threshold(self.supplemental_threshold)?;
        Ok((material, config))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PlaneStrain,
    PlaneStress,
}

impl From<Mode> for AnalysisMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PlaneStrain => AnalysisMode::PlaneStrain,
            Mode::PlaneStress => AnalysisMode::PlaneStress,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Modulus {
    /// λ + 2μ, the bar under lateral constraint (plane strain).
    Uniaxial,
    /// E/(1−ν²) in plane strain, E in plane stress.
    Effective,
    Youngs,
}

#[derive(Args)]
struct Analyze1d {
    #[command(flatten)]
    material: MaterialArgs,
    /// Bar modulus used by the 1D solution.
    #[arg(long, value_enum, default_value_t = Modulus::Uniaxial)]
    modulus: Modulus,
    /// Explicit bar modulus, overriding --modulus.
    #[arg(long)]
    e_bar: Option<f64>,
    /// Largest strain of the sweep, as a multiple of the peak strain.
    #[arg(long, default_value_t = 3.0)]
    max_strain_factor: f64,
    /// Number of sweep points.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Write the localized damage profile at this stress.
    #[arg(long)]
    profile_stress: Option<f64>,
    /// Half-width of the bar for the profile (mm).
    #[arg(long, default_value_t = 0.1)]
    half_width: f64,
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateFailure {
    #[command(flatten)]
    material: MaterialArgs,
    /// Minimum element size h in mm.
    #[arg(long)]
    h: f64,
    /// Crack length a0 in mm.
    #[arg(long)]
    a0: f64,
    /// Specimen width converting stress to load (mm).
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Use the raw G_c and a0 instead of their mesh-corrected values.
    #[arg(long)]
    no_effective: bool,
    /// Fracture mode: I or II.
    #[arg(long, default_value = "I")]
    fracture_mode: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args)]
struct Simulate {
    /// Config files.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Run the configs concurrently; each needs its own output directory.
    #[arg(long)]
    sweep: bool,
    /// Regenerate structured meshes at h = 0.005 mm.
    #[arg(long)]
    fine_mesh: bool,
    /// Override the output directory (one subdirectory per config when
    /// several are given).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print one line per load step.
    #[arg(long, short)]
    verbose: bool,
}

/// Format with `digits` significant figures, trailing zeros trimmed.
fn sig(x: f64, digits: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn analyze_1d(args: &Analyze1d) -> Result<()> {
    let (material, config) = args.material.build()?;
    let e_bar = match (args.e_bar, args.modulus) {
        (Some(e), _) => e,
        (None, Modulus::Uniaxial) => material.constrained_uniaxial_modulus()?,
        (None, Modulus::Effective) => material.effective_modulus(),
        (None, Modulus::Youngs) => material.youngs_modulus,
    };
    if args.points < 2 || args.max_strain_factor.is_nan() || args.max_strain_factor <= 0.0 {
        return Err(Error::Config(
            "--points must be at least 2 and --max-strain-factor positive".into(),
        ));
    }
    let gc = material.gc;
    let crit = critical_quantities(&config, e_bar, gc)?;
    println!("xi = {}", config.density.xi());
    println!("c_w = {}", sig(config.cw(), 10));
    println!("E_bar = {}", sig(e_bar, 10));
    println!("H_0 = {}", sig(initial_history(&config, gc), 10));
    println!("H_c = {}", sig(critical_strain_energy(&config, gc), 10));
    println!("d_c = {}", sig(crit.d_c, 10));
    println!("sigma_e = {}", sig(crit.sigma_e, 10));
    println!("sigma_c = {}", sig(crit.sigma_c, 10));
    println!("eps_c = {}", sig(crit.eps_c, 10));

    let mut out = open_output(&args.output)?;
    if args.output.is_none() {
        writeln!(out)?;
    }
    match args.profile_stress {
        Some(sigma) => {
            let profile = nonhomogeneous_profile(
                &config,
                e_bar,
                gc,
                sigma,
                args.half_width,
                ProfileOptions::default(),
            )?;
            writeln!(out, "x,damage")?;
            for (x, d) in profile.iter() {
                writeln!(out, "{x},{d}")?;
            }
        }
        None => {
            let top = args.max_strain_factor * crit.eps_c;
            let strains: Vec<f64> = (0..args.points)
                .map(|i| top * i as f64 / (args.points - 1) as f64)
                .collect();
            writeln!(out, "strain,stress,damage")?;
            for p in homogeneous_curve(&config, e_bar, gc, &strains)? {
                writeln!(out, "{},{},{}", p.strain, p.stress, p.damage)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn estimate_failure(args: &EstimateFailure) -> Result<()> {
    let (material, config) = args.material.build()?;
    let mut inputs = FailureInputs::new(material, config, args.h, args.a0);
    inputs.specimen_width = args.width;
    inputs.use_effective = !args.no_effective;
    inputs.mode = args.fracture_mode.parse::<FractureMode>()?;
    let e = failure_stress(&inputs)?;
    let rows = [
        ("G_c^eff", e.gc_eff),
        ("a0^eff", e.a0_eff),
        ("sigma_c", e.sigma_c),
        ("sigma_y0b", e.sigma_y0b),
        ("eta", e.eta),
        ("sigma_y0c", e.sigma_y0c),
        ("load_estimate", e.load_estimate),
    ];
    match args.format {
        Format::Table => {
            for (name, v) in rows {
                println!("{name:<14} = {}", sig(v, 6));
            }
        }
        Format::Csv => {
            println!("gc_eff,a0_eff,sigma_c,sigma_y0b,eta,sigma_y0c,load_estimate");
            let values: Vec<String> = rows.iter().map(|(_, v)| v.to_string()).collect();
            println!("{}", values.join(","));
        }
    }
    Ok(())
}

fn load_configs(args: &Simulate) -> Result<Vec<RunConfig>> {
    let mut configs = Vec::with_capacity(args.configs.len());
    for path in &args.configs {
        let mut c = read_config(path)?;
        if args.fine_mesh {
            c = c.with_element_size(FINE_MESH_H)?;
        }
        if let Some(dir) = &args.output_dir {
            c.output.directory = if args.configs.len() == 1 {
                dir.clone()
            } else {
                let stem = path
                    .file_stem()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("run"));
                dir.join(stem)
            };
        }
        configs.push(c);
    }
    let mut seen = BTreeSet::new();
    for c in &configs {
        if !seen.insert(c.output.directory.clone()) {
            return Err(Error::Config(format!(
                "output directory {} is shared by several configs",
                c.output.directory.display()
            )));
        }
    }
    Ok(configs)
}

fn report_line(config: &RunConfig, report: &RunReport) -> String {
    let name = config
        .source
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default();
    let status = match (&report.outcome.failure, report.outcome.terminated_early) {
        (Some(f), _) => format!("solver failure at step {}: {}", f.step, f.error),
        (None, true) => "terminated early".into(),
        (None, false) => "completed".into(),
    };
    let mut line = format!("{name}: {status}, {} steps", report.outcome.records.len());
    if let Some(p) = report.peak {
        line += &format!(
            ", peak {} kN at {} mm",
            sig(p.reaction_force, 6),
            sig(p.displacement, 6)
        );
    }
    if let Some(e) = report.estimate {
        line += &format!(", estimate {} kN", sig(e.load_estimate, 6));
    }
    line + &format!(" -> {}", report.output_dir.display())
}

fn simulate(args: &Simulate) -> std::result::Result<(), i32> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    let configs = load_configs(args).map_err(fail)?;
    // Validate everything before computing anything.
    let prepared = configs
        .iter()
        .map(prepare)
        .collect::<Result<Vec<_>>>()
        .map_err(fail)?;
    let verbose = args.verbose;
    let run_one = |(config, sim): (&RunConfig, pfrac_core::solver::Simulation)| -> std::result::Result<RunReport, Error> {
        if verbose {
            eprintln!("running {}", config.output.directory.display());
        }
        run_prepared(config, sim)
    };
    let results: Vec<std::result::Result<RunReport, Error>> = if args.sweep {
        configs
            .par_iter()
            .zip(prepared.into_par_iter())
            .map(run_one)
            .collect()
    } else {
        configs.iter().zip(prepared).map(run_one).collect()
    };
    let mut status = 0;
    for (config, result) in configs.iter().zip(results) {
        match result {
            Ok(report) => {
                if verbose {
                    for r in &report.outcome.records {
                        eprintln!(
                            "  step {} u={} F={} max_d={} iters={}/{} passes={}",
                            r.step,
                            r.displacement,
                            r.reaction_force,
                            r.max_damage,
                            r.displacement_iterations,
                            r.phase_iterations,
                            r.passes
                        );
                    }
                }
                println!("{}", report_line(config, &report));
                if report.solver_failed() && status == 0 {
                    status = 3;
                }
            }
            Err(e) => {
                let code = fail(e);
                if status == 0 {
                    status = code;
                }
            }
        }
    }
    if status == 0 {
        Ok(())
    } else {
        Err(status)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze1d(a) => analyze_1d(a).map_err(|e| {
            eprintln!("error: {e}");
            exit_code(&e)
        }),
        Command::EstimateFailure(a) => estimate_failure(a).map_err(|e| {
            eprintln!("error: {e}");
            exit_code(&e)
        }),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code as u8),
    }
}

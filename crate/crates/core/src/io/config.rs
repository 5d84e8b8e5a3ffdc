//! Run configuration: a flat `section.key = value` text format.
//!
//! Blank lines and everything after `#` are ignored. Every key must be known
//! and may appear at most once; errors carry the file path and line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::PhaseReaction;
use crate::material::{AnalysisMode, MaterialParams};
use crate::mesh::{generate_structured, read_mesh, CrackSpec, Mesh, SeamSide};
use crate::model::{CrackDensity, ModelConfig, DEFAULT_RESIDUAL_STIFFNESS};
use crate::solver::{
    Axis, FixedSet, LoadSchedule, SolverOptions, StaggerOrder, Tolerances, Traction,
};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        crack: Option<CrackSpec>,
    },
    File(PathBuf),
}

impl MeshSource {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSource::Structured {
                width,
                height,
                nx,
                ny,
                crack,
            } => generate_structured(*width, *height, *nx, *ny, crack.as_ref()),
            MeshSource::File(path) => read_mesh(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutputFormats {
    pub csv: bool,
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub directory: PathBuf,
    /// VTK snapshot every this many steps; 0 disables snapshots.
    pub snapshot_interval: usize,
    pub formats: OutputFormats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// File the config was read from, if any.
    pub source: Option<PathBuf>,
    pub material: MaterialParams,
    pub model: ModelConfig,
    pub mesh: MeshSource,
    pub schedule: LoadSchedule,
    pub solver: SolverOptions,
    pub output: OutputOptions,
}

impl RunConfig {
    /// Regenerate a structured mesh at element size `h`.
    pub fn with_element_size(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!(
                "element size must be positive, got {h}"
            )));
        }
        match &mut self.mesh {
            MeshSource::Structured {
                width,
                height,
                nx,
                ny,
                ..
            } => {
                *nx = ((*width / h).round() as usize).max(1);
                *ny = ((*height / h).round() as usize).max(1);
                Ok(self)
            }
            MeshSource::File(p) => Err(Error::Config(format!(
                "cannot change the element size of mesh file {}",
                p.display()
            ))),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Key/value table that tracks which keys were consumed.
struct Table<'a> {
    path: &'a Path,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Table<'a> {
    fn parse(text: &str, path: &'a Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected `section.key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.contains('.') || key.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if let Some(prev) = entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            ) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
        }
        Ok(Table { path, entries })
    }

    fn missing(&self, key: &str) -> Error {
        Error::Config(format!(
            "{}: missing required key `{key}`",
            self.path.display()
        ))
    }

    fn error(&self, line: usize, key: &str, message: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: format!("{key}: {message}"),
        }
    }

    /// Line of the first remaining key in `section`, for block-level errors.
    fn section_line(&self, section: &str, lines: &BTreeMap<String, usize>) -> usize {
        let prefix = format!("{section}.");
        lines
            .iter()
            .filter(|(k, _)| k.starts_with(&prefix))
            .map(|(_, &l)| l)
            .min()
            .unwrap_or(0)
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn take<T>(&mut self, key: &str) -> Result<Option<(T, usize)>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|err| {
                    self.error(e.line, key, format!("invalid value `{}`: {err}", e.value))
                }),
        }
    }

    fn get<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.map(|(v, _)| v))
    }

    fn require<T>(&mut self, key: &str) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| self.missing(key))
    }

    fn floats<const N: usize>(&mut self, key: &str) -> Result<Option<[f64; N]>> {
        let Some(e) = self.take_raw(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        if parts.len() != N {
            return Err(self.error(
                e.line,
                key,
                format!("expected {N} numbers, got `{}`", e.value),
            ));
        }
        let mut out = [0.0; N];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = p
                .parse()
                .map_err(|_| self.error(e.line, key, format!("invalid number `{p}`")))?;
        }
        Ok(Some(out))
    }

    fn finish(self) -> Result<()> {
        if let Some((key, e)) = self.entries.iter().min_by_key(|(_, e)| e.line) {
            return Err(Error::Parse {
                path: self.path.to_path_buf(),
                line: e.line,
                message: format!("unknown key `{key}`"),
            });
        }
        Ok(())
    }
}

/// Boolean accepting `true`/`false`, `yes`/`no` and `1`/`0`.
struct Flag(bool);

impl std::str::FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(Flag(true)),
            "false" | "no" | "0" => Ok(Flag(false)),
            _ => Err("expected true or false".into()),
        }
    }
}

fn side_from_str(s: &str) -> Result<SeamSide> {
    match s {
        "positive" => Ok(SeamSide::Positive),
        "negative" => Ok(SeamSide::Negative),
        other => Err(Error::invalid(format!(
            "unknown crack side `{other}` (expected positive or negative)"
        ))),
    }
}

fn positive(t: &Table, line: usize, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(t.error(line, key, format!("must be positive, got {v}")))
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, path)
}

/// Parse and validate a config. Relative mesh paths resolve against the
/// directory containing `path`.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let mut t = Table::parse(text, path)?;
    let lines: BTreeMap<String, usize> =
        t.entries.iter().map(|(k, e)| (k.clone(), e.line)).collect();
    let block_error = |t: &Table, section: &str, e: Error| -> Error {
        let line = t.section_line(section, &lines);
        let message = match e {
            Error::InvalidParameter(m) | Error::Mesh(m) | Error::Config(m) => m,
            other => other.to_string(),
        };
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{section}: {message}"),
        }
    };

    let youngs = t.require::<f64>("material.youngs_modulus")?;
    let nu = t.require::<f64>("material.poisson_ratio")?;
    let gc = t.require::<f64>("material.gc")?;
    let mode = match t.take_raw("material.mode") {
        None => AnalysisMode::default(),
        Some(e) => e
            .value
            .parse()
            .map_err(|err| t.error(e.line, "material.mode", err))?,
    };
    let material =
        MaterialParams::new(youngs, nu, gc, mode).map_err(|e| block_error(&t, "material", e))?;

    let density = match t.take::<i64>("model.xi")? {
        None => return Err(t.missing("model.xi")),
        Some((xi, line)) => CrackDensity::from_xi(xi).map_err(|e| t.error(line, "model.xi", e))?,
    };
    let l = t.require::<f64>("model.length_scale")?;
    let k = t
        .get::<f64>("model.residual_stiffness")?
        .unwrap_or(DEFAULT_RESIDUAL_STIFFNESS);
    let supp = t.take::<Flag>("model.supplemental_threshold")?;
    let model = ModelConfig::new(density, l)
        .and_then(|m| m.with_residual_stiffness(k))
        .map_err(|e| block_error(&t, "model", e))?;
    let model = match supp {
        None => model,
        Some((Flag(on), line)) => model
            .with_supplemental_threshold(on)
            .map_err(|e| t.error(line, "model.supplemental_threshold", e))?,
    };

    let mesh = match t.take_raw("mesh.file") {
        Some(e) => {
            for key in [
                "mesh.width",
                "mesh.height",
                "mesh.nx",
                "mesh.ny",
                "mesh.crack",
                "mesh.crack_side",
            ] {
                if let Some(other) = t.take_raw(key) {
                    return Err(t.error(other.line, key, "not allowed together with mesh.file"));
                }
            }
            let base = path.parent().unwrap_or_else(|| Path::new(""));
            let file = base.join(&e.value);
            if !file.is_file() {
                return Err(t.error(
                    e.line,
                    "mesh.file",
                    format!("file {} does not exist", file.display()),
                ));
            }
            MeshSource::File(file)
        }
        None => {
            let (width, lw) = t.take::<f64>("mesh.width")?.unwrap_or((1.0, 0));
            let (height, lh) = t.take::<f64>("mesh.height")?.unwrap_or((1.0, 0));
            let width = positive(&t, lw, "mesh.width", width)?;
            let height = positive(&t, lh, "mesh.height", height)?;
            let nx = t.require::<usize>("mesh.nx")?;
            let ny = t.require::<usize>("mesh.ny")?;
            let side = match t.take_raw("mesh.crack_side") {
                None => SeamSide::default(),
                Some(e) => side_from_str(&e.value)
                    .map_err(|err| t.error(e.line, "mesh.crack_side", err))?,
            };
            let crack = t.floats::<4>("mesh.crack")?.map(|c| CrackSpec {
                side,
                ..CrackSpec::new([c[0], c[1]], [c[2], c[3]])
            });
            MeshSource::Structured {
                width,
                height,
                nx,
                ny,
                crack,
            }
        }
    };

    let total_displacement = t.require::<f64>("schedule.total_displacement")?;
    let steps = t.require::<usize>("schedule.steps")?;
    let load_set = t
        .get::<String>("schedule.load_set")?
        .unwrap_or_else(|| "top".into());
    let load_axis = match t.take_raw("schedule.load_axis") {
        None => Axis::Y,
        Some(e) => e
            .value
            .parse()
            .map_err(|err| t.error(e.line, "schedule.load_axis", err))?,
    };
    let fixed = match t.take_raw("schedule.fixed") {
        None => vec!["bottom:xy".parse()?],
        Some(e) => e
            .value
            .split_whitespace()
            .map(str::parse::<FixedSet>)
            .collect::<Result<Vec<_>>>()
            .map_err(|err| t.error(e.line, "schedule.fixed", err))?,
    };
    let schedule = LoadSchedule {
        total_displacement,
        steps,
        load_set,
        load_axis,
        fixed,
    };

    let defaults = SolverOptions::default();
    let tol = Tolerances {
        absolute: t
            .get("solver.absolute_tolerance")?
            .unwrap_or(defaults.tolerances.absolute),
        relative: t
            .get("solver.relative_tolerance")?
            .unwrap_or(defaults.tolerances.relative),
        max_iterations: t
            .get("solver.max_iterations")?
            .unwrap_or(defaults.tolerances.max_iterations),
        divergence_window: t
            .get("solver.divergence_window")?
            .unwrap_or(defaults.tolerances.divergence_window),
    };
    let order = match t.take_raw("solver.order") {
        None => defaults.order,
        Some(e) => e
            .value
            .parse::<StaggerOrder>()
            .map_err(|err| t.error(e.line, "solver.order", err))?,
    };
    let phase_reaction = match t.take_raw("solver.phase_reaction") {
        None => defaults.phase_reaction,
        Some(e) => e
            .value
            .parse::<PhaseReaction>()
            .map_err(|err| t.error(e.line, "solver.phase_reaction", err))?,
    };
    let mut tractions = Vec::new();
    let traction_keys: Vec<String> = t
        .entries
        .keys()
        .filter(|k| k.starts_with("solver.traction."))
        .cloned()
        .collect();
    for key in traction_keys {
        let value = t.floats::<2>(&key)?.expect("key present");
        tractions.push(Traction {
            set: key["solver.traction.".len()..].to_string(),
            value,
        });
    }
    let solver = SolverOptions {
        tolerances: tol,
        passes: t.get("solver.passes")?.unwrap_or(defaults.passes),
        pass_tolerance: t
            .get("solver.pass_tolerance")?
            .unwrap_or(defaults.pass_tolerance),
        order,
        phase_reaction,
        stop_fraction: t
            .get("solver.stop_fraction")?
            .unwrap_or(defaults.stop_fraction),
        body_force: t
            .floats::<2>("solver.body_force")?
            .unwrap_or(defaults.body_force),
        tractions,
    };
    solver
        .validate()
        .map_err(|e| block_error(&t, "solver", e))?;

    let directory = t
        .get::<PathBuf>("output.directory")?
        .unwrap_or_else(|| PathBuf::from("output"));
    let snapshot_interval = t.get::<usize>("output.snapshot_interval")?.unwrap_or(0);
    let formats = match t.take_raw("output.formats") {
        None => OutputFormats {
            csv: true,
            vtk: true,
        },
        Some(e) => {
            let mut f = OutputFormats::default();
            for name in e.value.split_whitespace() {
                match name {
                    "csv" => f.csv = true,
                    "vtk" => f.vtk = true,
                    other => {
                        return Err(t.error(
                            e.line,
                            "output.formats",
                            format!("unknown format `{other}`"),
                        ));
                    }
                }
            }
            f
        }
    };
    let output = OutputOptions {
        directory,
        snapshot_interval,
        formats,
    };

    t.finish()?;
    Ok(RunConfig {
        source: Some(path.to_path_buf()),
        material,
        model,
        mesh,
        schedule,
        solver,
        output,
    })
}

/// Render a config in the same grammar `parse_config` reads.
pub fn format_config(config: &RunConfig) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let m = &config.material;
    let _ = writeln!(s, "material.youngs_modulus = {}", m.youngs_modulus);
    let _ = writeln!(s, "material.poisson_ratio = {}", m.poisson_ratio);
    let _ = writeln!(s, "material.gc = {}", m.gc);
    let _ = writeln!(s, "material.mode = {}", m.mode.as_str());
    let c = &config.model;
    let _ = writeln!(s, "model.xi = {}", c.density.xi());
    let _ = writeln!(s, "model.length_scale = {}", c.length_scale);
    let _ = writeln!(s, "model.residual_stiffness = {}", c.residual_stiffness);
    let _ = writeln!(
        s,
        "model.supplemental_threshold = {}",
        c.supplemental_threshold
    );
    match &config.mesh {
        MeshSource::Structured {
            width,
            height,
            nx,
            ny,
            crack,
        } => {
            let _ = writeln!(s, "mesh.width = {width}");
            let _ = writeln!(s, "mesh.height = {height}");
            let _ = writeln!(s, "mesh.nx = {nx}");
            let _ = writeln!(s, "mesh.ny = {ny}");
            if let Some(c) = crack {
                let _ = writeln!(
                    s,
                    "mesh.crack = {} {} {} {}",
                    c.start[0], c.start[1], c.end[0], c.end[1]
                );
                let side = match c.side {
                    SeamSide::Positive => "positive",
                    SeamSide::Negative => "negative",
                };
                let _ = writeln!(s, "mesh.crack_side = {side}");
            }
        }
        MeshSource::File(p) => {
            let _ = writeln!(s, "mesh.file = {}", p.display());
        }
    }
    let sc = &config.schedule;
    let _ = writeln!(s, "schedule.total_displacement = {}", sc.total_displacement);
    let _ = writeln!(s, "schedule.steps = {}", sc.steps);
    let _ = writeln!(s, "schedule.load_set = {}", sc.load_set);
    let _ = writeln!(s, "schedule.load_axis = {}", sc.load_axis.as_char());
    let fixed: Vec<String> = sc.fixed.iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "schedule.fixed = {}", fixed.join(" "));
    let o = &config.solver;
    let _ = writeln!(s, "solver.passes = {}", o.passes);
    let _ = writeln!(s, "solver.pass_tolerance = {}", o.pass_tolerance);
    let _ = writeln!(s, "solver.order = {}", o.order.as_str());
    let _ = writeln!(s, "solver.phase_reaction = {}", o.phase_reaction.as_str());
    let _ = writeln!(s, "solver.stop_fraction = {}", o.stop_fraction);
    let _ = writeln!(s, "solver.absolute_tolerance = {}", o.tolerances.absolute);
    let _ = writeln!(s, "solver.relative_tolerance = {}", o.tolerances.relative);
    let _ = writeln!(s, "solver.max_iterations = {}", o.tolerances.max_iterations);
    let _ = writeln!(
        s,
        "solver.divergence_window = {}",
        o.tolerances.divergence_window
    );
    if o.body_force != [0.0; 2] {
        let _ = writeln!(
            s,
            "solver.body_force = {} {}",
            o.body_force[0], o.body_force[1]
        );
    }
    for tr in &o.tractions {
        let _ = writeln!(
            s,
            "solver.traction.{} = {} {}",
            tr.set, tr.value[0], tr.value[1]
        );
    }
    let out = &config.output;
    let _ = writeln!(s, "output.directory = {}", out.directory.display());
    let _ = writeln!(s, "output.snapshot_interval = {}", out.snapshot_interval);
    let mut formats = Vec::new();
    if out.formats.csv {
        formats.push("csv");
    }
    if out.formats.vtk {
        formats.push("vtk");
    }
    let _ = writeln!(s, "output.formats = {}", formats.join(" "));
    s
}

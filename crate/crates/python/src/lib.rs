//! Python bindings (`import pfrac`).

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pfrac_core::analytic1d;
use pfrac_core::failure::{self, FailureInputs};
use pfrac_core::io;
use pfrac_core::mesh::{self, CrackSpec};
use pfrac_core::model;
use pfrac_core::solver::{
    Axis, Discard, FixedSet, LoadSchedule, Simulation as CoreSimulation, SolverOptions,
};
use pfrac_core::split::{self, Strain2D};
use pfrac_core::{AnalysisMode, CrackDensity};

create_exception!(pfrac, PfracError, PyException);

fn py_err(e: pfrac_core::Error) -> PyErr {
    PfracError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = pfrac_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

#[pyclass(frozen, skip_from_py_object, module = "pfrac")]
#[derive(Clone)]
struct MaterialParams {
    inner: pfrac_core::MaterialParams,
}

#[pymethods]
impl MaterialParams {
    #[new]
    #[pyo3(signature = (youngs_modulus, poisson_ratio, gc, mode = "plane_strain"))]
    fn new(youngs_modulus: f64, poisson_ratio: f64, gc: f64, mode: &str) -> PyResult<Self> {
        let mode: AnalysisMode = parse(mode)?;
        pfrac_core::MaterialParams::new(youngs_modulus, poisson_ratio, gc, mode)
            .map(|inner| MaterialParams { inner })
            .map_err(py_err)
    }

    #[getter]
    fn youngs_modulus(&self) -> f64 {
        self.inner.youngs_modulus
    }

    #[getter]
    fn poisson_ratio(&self) -> f64 {
        self.inner.poisson_ratio
    }

    #[getter]
    fn gc(&self) -> f64 {
        self.inner.gc
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    /// (lambda, mu) of the 3D material.
    fn lame_constants(&self) -> PyResult<(f64, f64)> {
        let l = self.inner.lame_constants().map_err(py_err)?;
        Ok((l.lambda, l.mu))
    }

    fn effective_modulus(&self) -> f64 {
        self.inner.effective_modulus()
    }

    fn constrained_uniaxial_modulus(&self) -> PyResult<f64> {
        self.inner.constrained_uniaxial_modulus().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!(
            "MaterialParams(youngs_modulus={}, poisson_ratio={}, gc={}, mode='{}')",
            m.youngs_modulus,
            m.poisson_ratio,
            m.gc,
            m.mode.as_str()
        )
    }
}

#[pyclass(frozen, skip_from_py_object, module = "pfrac")]
#[derive(Clone)]
struct ModelConfig {
    inner: pfrac_core::ModelConfig,
}

#[pymethods]
impl ModelConfig {
    #[new]
    #[pyo3(signature = (xi, length_scale, residual_stiffness = model::DEFAULT_RESIDUAL_STIFFNESS, supplemental_threshold = false))]
    fn new(
        xi: i64,
        length_scale: f64,
        residual_stiffness: f64,
        supplemental_threshold: bool,
    ) -> PyResult<Self> {
        CrackDensity::from_xi(xi)
            .and_then(|d| pfrac_core::ModelConfig::new(d, length_scale))
            .and_then(|c| c.with_residual_stiffness(residual_stiffness))
            .and_then(|c| c.with_supplemental_threshold(supplemental_threshold))
            .map(|inner| ModelConfig { inner })
            .map_err(py_err)
    }

    #[getter]
    fn xi(&self) -> u8 {
        self.inner.density.xi()
    }

    #[getter]
    fn length_scale(&self) -> f64 {
        self.inner.length_scale
    }

    #[getter]
    fn residual_stiffness(&self) -> f64 {
        self.inner.residual_stiffness
    }

    #[getter]
    fn supplemental_threshold(&self) -> bool {
        self.inner.supplemental_threshold
    }

    #[getter]
    fn cw(&self) -> f64 {
        self.inner.cw()
    }

    /// (w, w', w'') at d.
    fn crack_function(&self, d: f64) -> PyResult<(f64, f64, f64)> {
        model::crack_function(self.inner.density, d).map_err(py_err)
    }

    fn initial_history(&self, gc: f64) -> f64 {
        model::initial_history(&self.inner, gc)
    }

    fn critical_strain_energy(&self, gc: f64) -> f64 {
        model::critical_strain_energy(&self.inner, gc)
    }

    fn damage_from_history(&self, history: f64, gc: f64) -> PyResult<f64> {
        model::damage_from_history(history, &self.inner, gc).map_err(py_err)
    }

    /// Closed-form 1D crack profile at x.
    fn profile(&self, x: f64) -> f64 {
        model::geometric_profile(self.inner.density, x, self.inner.length_scale)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ModelConfig(xi={}, length_scale={}, residual_stiffness={}, supplemental_threshold={})",
            c.density.xi(),
            c.length_scale,
            c.residual_stiffness,
            if c.supplemental_threshold {
                "True"
            } else {
                "False"
            }
        )
    }
}

/// (g, g', g'') of the degradation (1 - d)^2.
#[pyfunction]
fn degradation(d: f64) -> PyResult<(f64, f64, f64)> {
    model::degradation(d).map_err(py_err)
}

/// Dict with d_c, sigma_e, sigma_c, eps_c.
#[pyfunction]
fn critical_quantities<'py>(
    py: Python<'py>,
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let q = analytic1d::critical_quantities(&config.inner, e_bar, gc).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("d_c", q.d_c)?;
    out.set_item("sigma_e", q.sigma_e)?;
    out.set_item("sigma_c", q.sigma_c)?;
    out.set_item("eps_c", q.eps_c)?;
    Ok(out)
}

/// (stress, damage) of the homogeneous bar at the given strain.
#[pyfunction]
fn homogeneous_response(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
    strain: f64,
) -> PyResult<(f64, f64)> {
    let p = analytic1d::homogeneous_response(&config.inner, e_bar, gc, strain).map_err(py_err)?;
    Ok((p.stress, p.damage))
}

/// (x, d) lists of the localized profile at stress sigma.
#[pyfunction]
#[pyo3(signature = (config, e_bar, gc, sigma, half_width, max_step_fraction = 1e-3))]
fn nonhomogeneous_profile(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
    sigma: f64,
    half_width: f64,
    max_step_fraction: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let options = analytic1d::ProfileOptions {
        max_step_fraction,
        ..Default::default()
    };
    let f =
        analytic1d::nonhomogeneous_profile(&config.inner, e_bar, gc, sigma, half_width, options)
            .map_err(py_err)?;
    Ok(f.iter().unzip())
}

/// Tensile and compressive energy of a plane strain [xx, yy, gamma_xy].
#[pyfunction]
fn split_energy(strain: [f64; 3], lame_lambda: f64, lame_mu: f64) -> (f64, f64) {
    let lame = pfrac_core::Lame {
        lambda: lame_lambda,
        mu: lame_mu,
    };
    let s = split::split_energy(&Strain2D::from_voigt(strain), &lame);
    (s.psi_plus, s.psi_minus)
}

/// Degraded stress [xx, yy, xy] for a strain [xx, yy, gamma_xy].
#[pyfunction]
#[pyo3(signature = (strain, d, lame_lambda, lame_mu, k = model::DEFAULT_RESIDUAL_STIFFNESS))]
fn stress(strain: [f64; 3], d: f64, lame_lambda: f64, lame_mu: f64, k: f64) -> [f64; 3] {
    let lame = pfrac_core::Lame {
        lambda: lame_lambda,
        mu: lame_mu,
    };
    split::stress(&Strain2D::from_voigt(strain), d, &lame, k).voigt()
}

/// Dict of the failure estimate fields.
#[pyfunction]
#[pyo3(signature = (material, config, h, a0, specimen_width = 1.0, use_effective = true))]
fn failure_stress<'py>(
    py: Python<'py>,
    material: &MaterialParams,
    config: &ModelConfig,
    h: f64,
    a0: f64,
    specimen_width: f64,
    use_effective: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut inputs = FailureInputs::new(material.inner, config.inner, h, a0);
    inputs.specimen_width = specimen_width;
    inputs.use_effective = use_effective;
    let e = failure::failure_stress(&inputs).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("gc_eff", e.gc_eff)?;
    out.set_item("a0_eff", e.a0_eff)?;
    out.set_item("sigma_c", e.sigma_c)?;
    out.set_item("sigma_y0b", e.sigma_y0b)?;
    out.set_item("eta", e.eta)?;
    out.set_item("sigma_y0c", e.sigma_y0c)?;
    out.set_item("load_estimate", e.load_estimate)?;
    Ok(out)
}

#[pyclass(frozen, skip_from_py_object, module = "pfrac")]
#[derive(Clone)]
struct Mesh {
    inner: pfrac_core::Mesh,
}

#[pymethods]
impl Mesh {
    /// Structured quad mesh of a width x height rectangle, optionally with a
    /// grid-aligned crack given as (x0, y0, x1, y1).
    #[staticmethod]
    #[pyo3(signature = (width, height, nx, ny, crack = None))]
    fn structured(
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        crack: Option<[f64; 4]>,
    ) -> PyResult<Self> {
        let crack = crack.map(|c| CrackSpec::new([c[0], c[1]], [c[2], c[3]]));
        mesh::generate_structured(width, height, nx, ny, crack.as_ref())
            .map(|inner| Mesh { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        mesh::read_mesh(&path)
            .map(|inner| Mesh { inner })
            .map_err(py_err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        mesh::write_mesh(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.inner.num_elements()
    }

    #[getter]
    fn nodes(&self) -> Vec<[f64; 2]> {
        self.inner.nodes.clone()
    }

    #[getter]
    fn elements(&self) -> Vec<[usize; 4]> {
        self.inner.elements.clone()
    }

    fn node_set(&self, name: &str) -> PyResult<Vec<usize>> {
        self.inner
            .node_set(name)
            .map(<[usize]>::to_vec)
            .map_err(py_err)
    }

    fn min_element_size(&self) -> PyResult<f64> {
        mesh::min_element_size(&self.inner).map_err(py_err)
    }

    /// Write nodal fields u (2 per node) and d as legacy VTK.
    fn write_vtk(&self, path: PathBuf, u: Vec<f64>, d: Vec<f64>) -> PyResult<()> {
        io::write_vtk(&self.inner, &u, &d, &path).map_err(py_err)
    }
}

/// Staggered displacement-driven simulation.
#[pyclass(module = "pfrac")]
struct Simulation {
    inner: CoreSimulation,
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (mesh, material, config, total_displacement, steps, fixed = vec!["bottom:xy".to_string()], load_set = "top", load_axis = "y", passes = 1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mesh: &Mesh,
        material: &MaterialParams,
        config: &ModelConfig,
        total_displacement: f64,
        steps: usize,
        fixed: Vec<String>,
        load_set: &str,
        load_axis: &str,
        passes: usize,
    ) -> PyResult<Self> {
        let fixed = fixed
            .iter()
            .map(|s| parse::<FixedSet>(s))
            .collect::<PyResult<Vec<_>>>()?;
        let schedule = LoadSchedule {
            total_displacement,
            steps,
            load_set: load_set.to_string(),
            load_axis: parse::<Axis>(load_axis)?,
            fixed,
        };
        let options = SolverOptions {
            passes,
            ..Default::default()
        };
        CoreSimulation::new(
            mesh.inner.clone(),
            material.inner,
            config.inner,
            schedule,
            options,
        )
        .map(|inner| Simulation { inner })
        .map_err(py_err)
    }

    /// One staggered step to the prescribed displacement; returns
    /// (displacement, reaction_force, max_damage).
    fn step(&mut self, py: Python<'_>, target: f64) -> PyResult<(f64, f64, f64)> {
        let r = py
            .detach(|| self.inner.staggered_step(target))
            .map_err(py_err)?;
        Ok((r.displacement, r.reaction_force, r.max_damage))
    }

    /// Run the schedule; returns a list of
    /// (step, displacement, reaction_force, max_damage).
    fn run(&mut self, py: Python<'_>) -> PyResult<Vec<(usize, f64, f64, f64)>> {
        let out = py.detach(|| self.inner.run(&mut Discard)).map_err(py_err)?;
        if let Some(f) = out.failure {
            return Err(PfracError::new_err(format!("step {}: {}", f.step, f.error)));
        }
        Ok(out
            .records
            .iter()
            .map(|r| (r.step, r.displacement, r.reaction_force, r.max_damage))
            .collect())
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.state().u.clone()
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.inner.state().d.clone()
    }

    #[getter]
    fn history(&self) -> Vec<f64> {
        self.inner.state().history.clone()
    }
}

/// Run a config file; returns a dict with the curve and summary values.
#[pyfunction]
#[pyo3(signature = (path, output_dir = None))]
fn simulate_config<'py>(
    py: Python<'py>,
    path: PathBuf,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = io::read_config(&path).map_err(py_err)?;
    if let Some(dir) = output_dir {
        config.output.directory = dir;
    }
    let report = py.detach(|| io::run(&config)).map_err(py_err)?;
    let out = PyDict::new(py);
    let curve: Vec<(usize, f64, f64, f64)> = report
        .outcome
        .records
        .iter()
        .map(|r| (r.step, r.displacement, r.reaction_force, r.max_damage))
        .collect();
    out.set_item("curve", curve)?;
    out.set_item("terminated_early", report.outcome.terminated_early)?;
    out.set_item(
        "failure",
        report
            .outcome
            .failure
            .as_ref()
            .map(|f| format!("step {}: {}", f.step, f.error)),
    )?;
    out.set_item("peak_reaction_force", report.peak.map(|p| p.reaction_force))?;
    out.set_item("displacement_at_peak", report.peak.map(|p| p.displacement))?;
    out.set_item("estimate_load", report.estimate.map(|e| e.load_estimate))?;
    out.set_item("output_dir", report.output_dir)?;
    Ok(out)
}

#[pymodule]
fn pfrac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PfracError", m.py().get_type::<PfracError>())?;
    m.add_class::<MaterialParams>()?;
    m.add_class::<ModelConfig>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(degradation, m)?)?;
    m.add_function(wrap_pyfunction!(critical_quantities, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_response, m)?)?;
    m.add_function(wrap_pyfunction!(nonhomogeneous_profile, m)?)?;
    m.add_function(wrap_pyfunction!(split_energy, m)?)?;
    m.add_function(wrap_pyfunction!(stress, m)?)?;
    m.add_function(wrap_pyfunction!(failure_stress, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_config, m)?)?;
    Ok(())
}

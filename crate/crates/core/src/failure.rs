//! Mesh-corrected fracture quantities and the mode-I failure stress estimate.

use std::f64::consts::PI;

use crate::analytic1d::critical_quantities;
use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::model::{CrackDensity, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FractureMode {
    #[default]
    ModeI,
    ModeII,
}

impl std::str::FromStr for FractureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" | "mode_i" => Ok(FractureMode::ModeI),
            "II" | "2" | "mode_ii" => Ok(FractureMode::ModeII),
            other => Err(Error::invalid(format!("unknown fracture mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureInputs {
    pub material: MaterialParams,
    pub config: ModelConfig,
    /// Minimum element size h (mm).
    pub h: f64,
    /// Crack length a₀ (mm).
    pub a0: f64,
    /// Ligament-normal width used to turn stress into load (mm).
    pub specimen_width: f64,
    /// Replace G_c and a₀ by their mesh-corrected values.
    pub use_effective: bool,
    pub mode: FractureMode,
}

impl FailureInputs {
    pub fn new(material: MaterialParams, config: ModelConfig, h: f64, a0: f64) -> Self {
        FailureInputs {
            material,
            config,
            h,
            a0,
            specimen_width: 1.0,
            use_effective: true,
            mode: FractureMode::ModeI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.config.validate()?;
        if !(self.h >= 0.0) || !self.h.is_finite() {
            return Err(Error::invalid(format!(
                "h must be nonnegative, got {}",
                self.h
            )));
        }
        if !(self.a0 > 0.0) || !self.a0.is_finite() {
            return Err(Error::invalid(format!(
                "a0 must be positive, got {}",
                self.a0
            )));
        }
        if !(self.specimen_width > 0.0) {
            return Err(Error::invalid(format!(
                "specimen_width must be positive, got {}",
                self.specimen_width
            )));
        }
        if self.mode == FractureMode::ModeII {
            return Err(Error::invalid(
                "the failure estimate applies to mode I only; mode II is not supported",
            ));
        }
        Ok(())
    }

    fn mesh_ratio(&self) -> f64 {
        self.h / (4.0 * self.config.cw() * self.config.length_scale)
    }

    fn gc_used(&self, use_effective: bool) -> f64 {
        if use_effective {
            effective_gc(self)
        } else {
            self.material.gc
        }
    }

    fn a0_used(&self, use_effective: bool) -> f64 {
        if use_effective {
            effective_a0(self)
        } else {
            self.a0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureEstimate {
    pub gc_eff: f64,
    pub a0_eff: f64,
    pub sigma_c: f64,
    pub sigma_y0b: f64,
    pub eta: f64,
    pub sigma_y0c: f64,
    /// kN per unit thickness.
    pub load_estimate: f64,
}

/// G_c (1 + h/(4 c_w l)).
pub fn effective_gc(inputs: &FailureInputs) -> f64 {
    inputs.material.gc * (1.0 + inputs.mesh_ratio())
}

/// a₀ (1 + π l/(4 a₀ (h/(4 c_w l) + 1))).
pub fn effective_a0(inputs: &FailureInputs) -> f64 {
    let l = inputs.config.length_scale;
    inputs.a0 * (1.0 + PI * l / (4.0 * inputs.a0 * (inputs.mesh_ratio() + 1.0)))
}

/// Griffith stress of a crack in an infinite plate.
pub fn griffith_stress(inputs: &FailureInputs, use_effective: bool) -> Result<f64> {
    inputs.validate()?;
    let beta = inputs.material.kolosov_beta();
    let denom = 3.0 - beta;
    if denom.abs() < 1e-12 {
        return Err(Error::invalid(
            "3 - beta vanishes (nu = 0); the Griffith stress is undefined",
        ));
    }
    let mu = inputs.material.lame_constants()?.mu;
    let gc = inputs.gc_used(use_effective);
    let a0 = inputs.a0_used(use_effective);
    Ok((8.0 * gc * mu / (denom * a0 * PI)).sqrt())
}

/// Homogeneous peak stress with the in-plane effective modulus.
pub fn peak_stress(inputs: &FailureInputs, use_effective: bool) -> Result<f64> {
    inputs.validate()?;
    let e_bar = inputs.material.effective_modulus();
    Ok(critical_quantities(&inputs.config, e_bar, inputs.gc_used(use_effective))?.sigma_c)
}

/// σ_c/σ_y^{0,b} in closed form, assuming the bar modulus equals E.
pub fn eta_closed_form(
    density: CrackDensity,
    beta: f64,
    nu: f64,
    a0: f64,
    length_scale: f64,
) -> f64 {
    let core = (3.0 - beta) * (1.0 + nu) * a0;
    match density {
        CrackDensity::Quadratic => 9.0 / 32.0 * (core * PI / (3.0 * length_scale)).sqrt(),
        CrackDensity::Linear => 0.25 * (3.0 * core * PI / (2.0 * length_scale)).sqrt(),
        CrackDensity::Mixed => (core / (2.0 * length_scale)).sqrt(),
    }
}

/// Critical stress scale factor σ_c/σ_y^{0,b}.
///
/// The closed form is rescaled by √(E_bar/E) so that it stays equal to the
/// stress ratio when the peak stress uses the plane-strain modulus.
pub fn eta(inputs: &FailureInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.config.supplemental_threshold {
        return Ok(peak_stress(inputs, inputs.use_effective)?
            / griffith_stress(inputs, inputs.use_effective)?);
    }
    let m = &inputs.material;
    let closed = eta_closed_form(
        inputs.config.density,
        m.kolosov_beta(),
        m.poisson_ratio,
        inputs.a0_used(inputs.use_effective),
        inputs.config.length_scale,
    );
    Ok(closed * (m.effective_modulus() / m.youngs_modulus).sqrt())
}

/// σ_c / √(1/2 + √(1/4 + η⁴)).
pub fn interpolated_failure_stress(sigma_c: f64, eta: f64) -> f64 {
    sigma_c * (1.0 / (0.5 + (0.25 + eta.powi(4)).sqrt())).sqrt()
}

pub fn failure_stress(inputs: &FailureInputs) -> Result<FailureEstimate> {
    inputs.validate()?;
    let eff = inputs.use_effective;
    let sigma_c = peak_stress(inputs, eff)?;
    let sigma_y0b = griffith_stress(inputs, eff)?;
    let eta = eta(inputs)?;
    let sigma_y0c = interpolated_failure_stress(sigma_c, eta);
    Ok(FailureEstimate {
        gc_eff: effective_gc(inputs),
        a0_eff: effective_a0(inputs),
        sigma_c,
        sigma_y0b,
        eta,
        sigma_y0c,
        load_estimate: sigma_y0c * inputs.specimen_width,
    })
}

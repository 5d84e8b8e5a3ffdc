//! Scalar functions of the phase field: crack density w(d), its
//! normalization c_w, the quadratic degradation g(d), the 1D crack profiles,
//! surface density γ, and the threshold / damage-from-history closed forms.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::MeshGeometry;

/// Tolerance for phase-field values slightly outside [0, 1].
pub const CLAMP_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_RESIDUAL_STIFFNESS: f64 = 1e-7;

/// Crack density family, w(d) = ξd + (1−ξ)d².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrackDensity {
    /// ξ = 0, w = d² (AT2).
    Quadratic,
    /// ξ = 1, w = d (AT1).
    Linear,
    /// ξ = 2, w = 2d − d².
    Mixed,
}

impl CrackDensity {
    pub fn from_xi(xi: i64) -> Result<Self> {
        match xi {
            0 => Ok(CrackDensity::Quadratic),
            1 => Ok(CrackDensity::Linear),
            2 => Ok(CrackDensity::Mixed),
            other => Err(Error::invalid(format!("xi must be 0, 1 or 2, got {other}"))),
        }
    }

    pub fn xi(self) -> u8 {
        match self {
            CrackDensity::Quadratic => 0,
            CrackDensity::Linear => 1,
            CrackDensity::Mixed => 2,
        }
    }

    fn xi_f64(self) -> f64 {
        f64::from(self.xi())
    }

    /// c_w = ∫₀¹ √w(s) ds.
    pub fn cw(self) -> f64 {
        match self {
            CrackDensity::Quadratic => 0.5,
            CrackDensity::Linear => 2.0 / 3.0,
            CrackDensity::Mixed => PI / 4.0,
        }
    }

    /// Half-width of the support of the 1D profile (infinite for ξ = 0).
    pub fn profile_support(self, length_scale: f64) -> f64 {
        match self {
            CrackDensity::Quadratic => f64::INFINITY,
            CrackDensity::Linear => 2.0 * length_scale,
            CrackDensity::Mixed => 0.5 * PI * length_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub density: CrackDensity,
    /// l in mm.
    pub length_scale: f64,
    /// k, the residual stiffness added to g(d).
    pub residual_stiffness: f64,
    /// Adds H_c = G_c/(2l) to the ξ = 0 model.
    pub supplemental_threshold: bool,
}

impl ModelConfig {
    pub fn new(density: CrackDensity, length_scale: f64) -> Result<Self> {
        let c = ModelConfig {
            density,
            length_scale,
            residual_stiffness: DEFAULT_RESIDUAL_STIFFNESS,
            supplemental_threshold: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_supplemental_threshold(mut self, on: bool) -> Result<Self> {
        self.supplemental_threshold = on;
        self.validate()?;
        Ok(self)
    }

    pub fn with_residual_stiffness(mut self, k: f64) -> Result<Self> {
        self.residual_stiffness = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !self.length_scale.is_finite() {
            return Err(Error::invalid(format!(
                "length_scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(0.0..1e-2).contains(&self.residual_stiffness) {
            return Err(Error::invalid(format!(
                "residual_stiffness must lie in [0, 1e-2), got {}",
                self.residual_stiffness
            )));
        }
        if self.supplemental_threshold && self.density != CrackDensity::Quadratic {
            return Err(Error::invalid(
                "supplemental_threshold is only defined for xi = 0",
            ));
        }
        Ok(())
    }

    pub fn cw(&self) -> f64 {
        self.density.cw()
    }
}

/// Ordered (x, d) samples of a 1D phase-field profile.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField1D {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
}

impl ScalarField1D {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.d.iter().copied())
    }
}

/// Clamps d into [0, 1] when it is within [`CLAMP_TOLERANCE`] of the range.
pub fn clamp_phase(d: f64) -> Result<f64> {
    if (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&d) {
        Ok(d.clamp(0.0, 1.0))
    } else {
        Err(Error::invalid(format!(
            "phase field value {d} outside [0, 1]"
        )))
    }
}

/// (w, w', w'').
pub fn crack_function(density: CrackDensity, d: f64) -> Result<(f64, f64, f64)> {
    let d = clamp_phase(d)?;
    Ok(crack_function_unchecked(density, d))
}

pub(crate) fn crack_function_unchecked(density: CrackDensity, d: f64) -> (f64, f64, f64) {
    let xi = density.xi_f64();
    (
        xi * d + (1.0 - xi) * d * d,
        xi + 2.0 * (1.0 - xi) * d,
        2.0 * (1.0 - xi),
    )
}

pub fn normalization_constant(density: CrackDensity) -> f64 {
    density.cw()
}

/// Quadratic degradation (g, g', g'') with g = (1−d)².
pub fn degradation(d: f64) -> Result<(f64, f64, f64)> {
    let d = clamp_phase(d)?;
    Ok(degradation_unchecked(d))
}

pub(crate) fn degradation_unchecked(d: f64) -> (f64, f64, f64) {
    let s = 1.0 - d;
    (s * s, -2.0 * s, 2.0)
}

/// Closed-form 1D crack profile d(x) centered at x = 0.
pub fn geometric_profile(density: CrackDensity, x: f64, length_scale: f64) -> f64 {
    let r = x.abs() / length_scale;
    match density {
        CrackDensity::Quadratic => (-r).exp(),
        CrackDensity::Linear => {
            if r <= 2.0 {
                let s = 1.0 - 0.5 * r;
                s * s
            } else {
                0.0
            }
        }
        CrackDensity::Mixed => {
            if r <= 0.5 * PI {
                1.0 - r.sin()
            } else {
                0.0
            }
        }
    }
}

/// γ(d, ∇d) = (w(d)/l + l|∇d|²)/(4c_w).
pub fn surface_density(config: &ModelConfig, d: f64, grad_d: [f64; 2]) -> Result<f64> {
    let (w, _, _) = crack_function(config.density, d)?;
    let l = config.length_scale;
    let g2 = grad_d[0] * grad_d[0] + grad_d[1] * grad_d[1];
    Ok((w / l + l * g2) / (4.0 * config.cw()))
}

/// Γ(d) = ∫ γ dV over the mesh with 2×2 Gauss quadrature, per unit thickness.
pub fn crack_surface_functional(
    geometry: &MeshGeometry,
    d: &[f64],
    config: &ModelConfig,
) -> Result<f64> {
    if d.len() != geometry.num_nodes() {
        return Err(Error::Dimension(format!(
            "phase field has {} values for {} nodes",
            d.len(),
            geometry.num_nodes()
        )));
    }
    let mut total = 0.0;
    for (conn, element) in geometry.elements() {
        let de = [d[conn[0]], d[conn[1]], d[conn[2]], d[conn[3]]];
        for qp in element.points.iter() {
            let dq = qp.interpolate(&de);
            let grad = qp.gradient(&de);
            total += surface_density(config, dq, grad)? * qp.weight;
        }
    }
    Ok(total)
}

/// H₀ = −w'(0) G_c / (4 g'(0) c_w l) = ξ G_c / (8 c_w l).
pub fn initial_history(config: &ModelConfig, gc: f64) -> f64 {
    let (_, dw0, _) = crack_function_unchecked(config.density, 0.0);
    let (_, dg0, _) = degradation_unchecked(0.0);
    -dw0 * gc / (4.0 * dg0 * config.cw() * config.length_scale)
}

/// H_c: ξ G_c/(8 c_w l), or G_c/(2l) with the supplemental threshold.
pub fn critical_strain_energy(config: &ModelConfig, gc: f64) -> f64 {
    if config.supplemental_threshold {
        gc / (2.0 * config.length_scale)
    } else {
        config.density.xi_f64() * gc / (8.0 * config.cw() * config.length_scale)
    }
}

/// The history value that drives the phase-field equation.
///
/// Equal to H for the standard models; ⟨H − H_c⟩₊ with the supplemental
/// threshold, so that the ξ = 0 equation reproduces the thresholded damage law.
pub fn driving_history(history: f64, config: &ModelConfig, gc: f64) -> f64 {
    if config.supplemental_threshold {
        (history - critical_strain_energy(config, gc)).max(0.0)
    } else {
        history
    }
}

/// Homogeneous (gradient-free) damage in equilibrium with history H.
pub fn damage_from_history(history: f64, config: &ModelConfig, gc: f64) -> Result<f64> {
    if history < 0.0 || !history.is_finite() {
        return Err(Error::invalid(format!(
            "history must be nonnegative, got {history}"
        )));
    }
    let l = config.length_scale;
    let hc = critical_strain_energy(config, gc);
    if config.supplemental_threshold {
        let excess = (history - hc).max(0.0);
        return Ok(excess / (excess + gc / (2.0 * l)));
    }
    if history <= hc {
        return Ok(0.0);
    }
    let xi = config.density.xi_f64();
    let denom = history + (1.0 - xi) * gc / (4.0 * config.cw() * l);
    Ok(((history - hc) / denom).min(1.0))
}

//! Isotropic material parameters and elastic constant conversions.
//!
//! Units are kN, mm and kN/mm² throughout.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnalysisMode {
    #[default]
    PlaneStrain,
    PlaneStress,
}

impl AnalysisMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisMode::PlaneStrain => "plane_strain",
            AnalysisMode::PlaneStress => "plane_stress",
        }
    }
}

impl std::str::FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane_strain" => Ok(AnalysisMode::PlaneStrain),
            "plane_stress" => Ok(AnalysisMode::PlaneStress),
            other => Err(Error::invalid(format!(
                "unknown analysis mode `{other}` (expected plane_strain or plane_stress)"
            ))),
        }
    }
}

/// Lamé constants (λ, μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// E0 in kN/mm².
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// G_c in kN/mm.
    pub gc: f64,
    pub mode: AnalysisMode,
}

impl MaterialParams {
    pub fn new(
        youngs_modulus: f64,
        poisson_ratio: f64,
        gc: f64,
        mode: AnalysisMode,
    ) -> Result<Self> {
        let m = MaterialParams {
            youngs_modulus,
            poisson_ratio,
            gc,
            mode,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0) || !self.youngs_modulus.is_finite() {
            return Err(Error::invalid(format!(
                "youngs_modulus must be positive, got {}",
                self.youngs_modulus
            )));
        }
        if !(self.gc > 0.0) || !self.gc.is_finite() {
            return Err(Error::invalid(format!(
                "critical energy release rate must be positive, got {}",
                self.gc
            )));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::invalid(format!(
                "poisson_ratio must lie in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    pub fn lame_constants(&self) -> Result<Lame> {
        lame_constants(self.youngs_modulus, self.poisson_ratio)
    }

    /// Lamé constants of the in-plane constitutive law used by the 2D solver.
    ///
    /// Plane strain uses (λ, μ) directly with ε_zz = 0. Plane stress uses the
    /// reduced λ* = 2λμ/(λ+2μ), which reproduces the plane-stress stiffness
    /// for the undamaged material.
    pub fn in_plane_lame(&self) -> Result<Lame> {
        let Lame { lambda, mu } = self.lame_constants()?;
        Ok(match self.mode {
            AnalysisMode::PlaneStrain => Lame { lambda, mu },
            AnalysisMode::PlaneStress => Lame {
                lambda: 2.0 * lambda * mu / (lambda + 2.0 * mu),
                mu,
            },
        })
    }

    pub fn effective_modulus(&self) -> f64 {
        effective_modulus(self.youngs_modulus, self.poisson_ratio, self.mode)
    }

    pub fn kolosov_beta(&self) -> f64 {
        kolosov_beta(self.poisson_ratio, self.mode)
    }

    pub fn constrained_uniaxial_modulus(&self) -> Result<f64> {
        if self.mode != AnalysisMode::PlaneStrain {
            return Err(Error::invalid(
                "constrained uniaxial modulus E22 is defined for plane strain only",
            ));
        }
        constrained_uniaxial_modulus(self.youngs_modulus, self.poisson_ratio)
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.5 {
        return Err(Error::invalid(format!(
            "poisson_ratio {nu} reaches the incompressible limit (λ diverges)"
        )));
    }
    if nu < 0.0 || !nu.is_finite() {
        return Err(Error::invalid(format!("poisson_ratio {nu} out of range")));
    }
    Ok(())
}

pub fn lame_constants(youngs_modulus: f64, nu: f64) -> Result<Lame> {
    check_nu(nu)?;
    Ok(Lame {
        lambda: youngs_modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        mu: youngs_modulus / (2.0 * (1.0 + nu)),
    })
}

/// E0 for plane stress, E0/(1−ν²) for plane strain.
pub fn effective_modulus(youngs_modulus: f64, nu: f64, mode: AnalysisMode) -> f64 {
    match mode {
        AnalysisMode::PlaneStress => youngs_modulus,
        AnalysisMode::PlaneStrain => youngs_modulus / (1.0 - nu * nu),
    }
}

/// Kolosov constant β: 3−4ν in plane strain, (3−ν)/(1+ν) in plane stress.
pub fn kolosov_beta(nu: f64, mode: AnalysisMode) -> f64 {
    match mode {
        AnalysisMode::PlaneStrain => 3.0 - 4.0 * nu,
        AnalysisMode::PlaneStress => (3.0 - nu) / (1.0 + nu),
    }
}

/// E22 = E(1−ν)/((1+ν)(1−2ν)), the plane-strain stiffness under laterally
/// constrained uniaxial strain.
pub fn constrained_uniaxial_modulus(youngs_modulus: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(youngs_modulus * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu)))
}

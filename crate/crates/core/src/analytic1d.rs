//! One-dimensional bar solutions: homogeneous stress–strain response,
//! critical quantities, and localized (nonhomogeneous) damage profiles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{crack_function_unchecked, CrackDensity, ModelConfig, ScalarField1D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalQuantities {
    /// Damage at peak stress.
    pub d_c: f64,
    /// Elastic limit stress.
    pub sigma_e: f64,
    /// Peak stress.
    pub sigma_c: f64,
    /// Strain at peak stress.
    pub eps_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPoint {
    pub strain: f64,
    pub stress: f64,
    pub damage: f64,
}

fn check_inputs(config: &ModelConfig, e_bar: f64, gc: f64) -> Result<()> {
    config.validate()?;
    if !(e_bar > 0.0) || !e_bar.is_finite() {
        return Err(Error::invalid(format!(
            "modulus must be positive, got {e_bar}"
        )));
    }
    if !(gc > 0.0) || !gc.is_finite() {
        return Err(Error::invalid(format!("gc must be positive, got {gc}")));
    }
    Ok(())
}

/// h(d) = 1/g(d) − 1.
pub fn compliance_excess(d: f64) -> f64 {
    let s = 1.0 - d;
    1.0 / (s * s) - 1.0
}

pub fn critical_quantities(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
) -> Result<CriticalQuantities> {
    check_inputs(config, e_bar, gc)?;
    let l = config.length_scale;
    let q = if config.supplemental_threshold {
        let eps = (gc / (e_bar * l)).sqrt();
        let s = e_bar * eps;
        CriticalQuantities {
            d_c: 0.0,
            sigma_e: s,
            sigma_c: s,
            eps_c: eps,
        }
    } else {
        match config.density {
            CrackDensity::Quadratic => CriticalQuantities {
                d_c: 0.25,
                sigma_e: 0.0,
                sigma_c: 9.0 / 16.0 * (e_bar * gc / (3.0 * l)).sqrt(),
                eps_c: (gc / (3.0 * e_bar * l)).sqrt(),
            },
            CrackDensity::Linear => {
                let eps = (3.0 * gc / (8.0 * e_bar * l)).sqrt();
                CriticalQuantities {
                    d_c: 0.0,
                    sigma_e: e_bar * eps,
                    sigma_c: e_bar * eps,
                    eps_c: eps,
                }
            }
            CrackDensity::Mixed => {
                let eps = (2.0 * gc / (PI * e_bar * l)).sqrt();
                CriticalQuantities {
                    d_c: 0.0,
                    sigma_e: e_bar * eps,
                    sigma_c: e_bar * eps,
                    eps_c: eps,
                }
            }
        }
    };
    Ok(q)
}

/// Stress and damage of a uniformly strained bar under monotonic loading.
pub fn homogeneous_response(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
    strain: f64,
) -> Result<HomogeneousPoint> {
    check_inputs(config, e_bar, gc)?;
    if !(strain >= 0.0) || !strain.is_finite() {
        return Err(Error::invalid(format!(
            "strain must be nonnegative, got {strain}"
        )));
    }
    let l = config.length_scale;
    let el2 = e_bar * l * strain * strain;
    let damage = if config.supplemental_threshold {
        // (H − H_c)/H with H = Eε²/2, H_c = G_c/(2l)
        if el2 > gc {
            (el2 - gc) / el2
        } else {
            0.0
        }
    } else {
        match config.density {
            CrackDensity::Quadratic => el2 / (gc + el2),
            CrackDensity::Linear => {
                if 8.0 * el2 > 3.0 * gc {
                    (8.0 * el2 - 3.0 * gc) / (8.0 * el2)
                } else {
                    0.0
                }
            }
            CrackDensity::Mixed => {
                if PI * el2 > 2.0 * gc {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    let s = 1.0 - damage;
    Ok(HomogeneousPoint {
        strain,
        stress: s * s * e_bar * strain,
        damage,
    })
}

/// Homogeneous response on a grid of strains.
pub fn homogeneous_curve(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
    strains: &[f64],
) -> Result<Vec<HomogeneousPoint>> {
    strains
        .iter()
        .map(|&e| homogeneous_response(config, e_bar, gc, e))
        .collect()
}

/// Integration controls for [`nonhomogeneous_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Largest step as a fraction of l.
    pub max_step_fraction: f64,
    pub tolerance: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            max_step_fraction: 1e-3,
            tolerance: 1e-12,
        }
    }
}

/// Localized damage profile of a bar of half-width `half_width` carrying
/// stress `sigma`, centered at x = 0.
///
/// The first integral (d')² = (A·w − σ²h − a)/(A l²) is differentiated to
/// d'' = (A·w' − σ²h')/(2A l²) and marched from the center with an adaptive
/// Dormand–Prince scheme. The first integral is monitored along the path and
/// a negative radicand is reported.
pub fn nonhomogeneous_profile(
    config: &ModelConfig,
    e_bar: f64,
    gc: f64,
    sigma: f64,
    half_width: f64,
    options: ProfileOptions,
) -> Result<ScalarField1D> {
    check_inputs(config, e_bar, gc)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "stress must be nonnegative, got {sigma}"
        )));
    }
    if !(half_width > 0.0) {
        return Err(Error::invalid(format!(
            "half_width must be positive, got {half_width}"
        )));
    }
    if config.supplemental_threshold {
        return Err(Error::invalid(
            "profiles are not available with the supplemental threshold",
        ));
    }
    let l = config.length_scale;
    let a_coef = e_bar * gc / (2.0 * config.cw() * l);
    let density = config.density;

    let (d_far, a_const, d0, p0) = if sigma == 0.0 {
        let (w1, _, _) = crack_function_unchecked(density, 1.0);
        (0.0, 0.0, 1.0, -(w1).sqrt() / l)
    } else {
        if density != CrackDensity::Quadratic {
            return Err(Error::invalid(
                "profiles under nonzero stress are only derived for xi = 0",
            ));
        }
        let crit = critical_quantities(config, e_bar, gc)?;
        if sigma >= crit.sigma_c {
            return Err(Error::invalid(format!(
                "stress {sigma} reaches the peak stress {}; no localized solution",
                crit.sigma_c
            )));
        }
        let eps = stable_strain(config, e_bar, gc, sigma, crit.eps_c)?;
        let d_hom = homogeneous_response(config, e_bar, gc, eps)?.damage;
        let (w_h, _, _) = crack_function_unchecked(density, d_hom);
        let a = a_coef * w_h - sigma * sigma * compliance_excess(d_hom);
        let radicand = |d: f64| {
            let (w, _, _) = crack_function_unchecked(density, d);
            a_coef * w - sigma * sigma * compliance_excess(d) - a
        };
        let d_max = peak_damage(&radicand, d_hom)?;
        (d_hom, a, d_max, 0.0)
    };

    let rhs = |d: f64| {
        let (_, dw, _) = crack_function_unchecked(density, d);
        // the compliance term is singular at d = 1 and absent at zero stress
        let load = if sigma == 0.0 {
            0.0
        } else {
            let s = 1.0 - d;
            sigma * sigma * 2.0 / (s * s * s)
        };
        (a_coef * dw - load) / (2.0 * a_coef * l * l)
    };
    let first_integral = |d: f64, p: f64| {
        let (w, _, _) = crack_function_unchecked(density, d);
        let r = (a_coef * w - sigma * sigma * compliance_excess(d) - a_const) / (a_coef * l * l);
        (r, p * p - r)
    };

    let h_max = options.max_step_fraction * l;
    let settle = 1e-9 * d0.max(1.0);
    let mut xs = vec![0.0];
    let mut ds = vec![d0];
    let (mut x, mut y) = (0.0, [d0, p0]);
    let mut h = h_max;
    let f = |y: [f64; 2]| [y[1], rhs(y[0])];
    let mut finished = false;

    while x < half_width && !finished {
        let step = h.min(h_max).min(half_width - x);
        let (y_new, err) = dopri_step(&f, y, step);
        if !(y_new[0].is_finite() && y_new[1].is_finite()) {
            return Err(Error::invalid(format!(
                "profile integration produced a non-finite state at x = {x:.6e}"
            )));
        }
        let scale = options.tolerance
            * (1.0 + y[0].abs().max(y_new[0].abs()) + l * y[1].abs().max(y_new[1].abs()));
        let err_norm = (err[0].abs() + l * err[1].abs()) / scale;
        if err_norm > 1.0 && step > 1e-6 * h_max {
            h = step * (0.9 * err_norm.powf(-0.2)).max(0.2);
            continue;
        }
        // support end: slope reaches zero or the field reaches its far value
        if y_new[1] >= 0.0 || y_new[0] - d_far <= settle {
            let t = support_end(&f, y, step, d_far, settle);
            let (y_end, _) = dopri_step(&f, y, t);
            x += t;
            xs.push(x);
            ds.push(y_end[0].max(d_far));
            finished = true;
            continue;
        }
        let (r, mismatch) = first_integral(y_new[0], y_new[1]);
        if r < -1e-8 * (1.0 / (l * l)) {
            return Err(Error::invalid(format!(
                "negative radicand {r:.3e} at x = {:.6e}; stress and domain are inconsistent",
                x + step
            )));
        }
        if mismatch.abs() > 1e-6 / (l * l) {
            return Err(Error::invalid(format!(
                "profile integration drifted (first-integral error {mismatch:.3e})"
            )));
        }
        x += step;
        y = y_new;
        xs.push(x);
        ds.push(y[0]);
        if err_norm > 0.0 {
            h = step * (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h = step * 5.0;
        }
    }
    // flat tail out to the domain boundary
    while x < half_width {
        x = (x + h_max).min(half_width);
        xs.push(x);
        ds.push(d_far);
    }

    let mut field = ScalarField1D::default();
    for (xi, di) in xs.iter().zip(&ds).rev() {
        if *xi > 0.0 {
            field.x.push(-xi);
            field.d.push(*di);
        }
    }
    for (xi, di) in xs.iter().zip(&ds) {
        field.x.push(*xi);
        field.d.push(*di);
    }
    Ok(field)
}

/// Strain on the rising branch with stress `sigma` (ξ = 0).
fn stable_strain(config: &ModelConfig, e_bar: f64, gc: f64, sigma: f64, eps_c: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = eps_c;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if homogeneous_response(config, e_bar, gc, mid)?.stress < sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest damage reached at the profile center: the simple root of the
/// radicand above the homogeneous value.
fn peak_damage(radicand: &dyn Fn(f64) -> f64, d_hom: f64) -> Result<f64> {
    let n = 4000;
    let mut prev = None;
    let mut positive_seen = false;
    for k in 1..n {
        let d = d_hom + (1.0 - d_hom) * k as f64 / n as f64;
        let r = radicand(d);
        if r > 0.0 {
            positive_seen = true;
            prev = Some(d);
        } else if positive_seen {
            let (mut lo, mut hi) = (prev.unwrap(), d);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if radicand(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::invalid("no localized solution for this stress"))
}

/// Step length within [0, step] at which the slope vanishes or the field
/// settles, by bisection on single steps from `y`.
fn support_end(
    f: &impl Fn([f64; 2]) -> [f64; 2],
    y: [f64; 2],
    step: f64,
    d_far: f64,
    settle: f64,
) -> f64 {
    let (mut lo, mut hi) = (0.0, step);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = dopri_step(f, y, mid);
        if ym[1] >= 0.0 || ym[0] - d_far <= settle {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// One Dormand–Prince 5(4) step; returns the fifth-order solution and the
/// embedded error estimate.
fn dopri_step(f: &impl Fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0; 2]; 7];
    k[0] = f(y);
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s - 1][j] * kj[0];
            ys[1] += h * A[s - 1][j] * kj[1];
        }
        k[s] = f(ys);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[s] * k[s][c];
            err[c] += h * (B5[s] - B4[s]) * k[s][c];
        }
    }
    (y5, err)
}

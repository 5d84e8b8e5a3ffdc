//! Spectral tension/compression split of the small-strain elastic energy in 2D.
//!
//! The split acts on the in-plane strain tensor. Tensor shear (ε_xy) is used
//! internally; [`tangent`] returns the Voigt matrix with engineering shear.

use crate::material::Lame;

/// Symmetric in-plane strain tensor. `xy` is the tensor component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Strain2D {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Strain2D {
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Strain2D { xx, yy, xy }
    }

    /// From Voigt components with engineering shear γ = 2ε_xy.
    pub fn from_voigt(v: [f64; 3]) -> Self {
        Strain2D {
            xx: v[0],
            yy: v[1],
            xy: 0.5 * v[2],
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// R ε Rᵀ for a rotation by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Strain2D {
            xx: c * c * self.xx - 2.0 * s * c * self.xy + s * s * self.yy,
            yy: s * s * self.xx + 2.0 * s * c * self.xy + c * c * self.yy,
            xy: s * c * (self.xx - self.yy) + (c * c - s * s) * self.xy,
        }
    }
}

/// Symmetric stress tensor (σ_xx, σ_yy, σ_xy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stress2D {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Stress2D {
    pub fn voigt(&self) -> [f64; 3] {
        [self.xx, self.yy, self.xy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectral {
    /// ε₁ ≥ ε₂.
    pub values: [f64; 2],
    /// Orthonormal eigenvectors matching `values`.
    pub vectors: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEnergy {
    pub psi_plus: f64,
    pub psi_minus: f64,
}

pub fn eigen2(e: &Strain2D) -> Spectral {
    let mean = 0.5 * (e.xx + e.yy);
    let half_diff = 0.5 * (e.xx - e.yy);
    let radius = half_diff.hypot(e.xy);
    let angle = 0.5 * (2.0 * e.xy).atan2(e.xx - e.yy);
    let (s, c) = angle.sin_cos();
    Spectral {
        values: [mean + radius, mean - radius],
        vectors: [[c, s], [-s, c]],
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    0.5 * (x + x.abs())
}

#[inline]
fn neg(x: f64) -> f64 {
    0.5 * (x - x.abs())
}

/// Derivative of ⟨x⟩₊; the zero state is assigned to the tensile branch.
#[inline]
fn step_plus(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn split_energy(e: &Strain2D, lame: &Lame) -> SplitEnergy {
    let sp = eigen2(e);
    let tr = e.trace();
    let [e1, e2] = sp.values;
    SplitEnergy {
        psi_plus: 0.5 * lame.lambda * pos(tr).powi(2)
            + lame.mu * (pos(e1).powi(2) + pos(e2).powi(2)),
        psi_minus: 0.5 * lame.lambda * neg(tr).powi(2)
            + lame.mu * (neg(e1).powi(2) + neg(e2).powi(2)),
    }
}

/// ψ₀ = λ tr²/2 + μ tr(ε²), without splitting.
pub fn undamaged_energy(e: &Strain2D, lame: &Lame) -> f64 {
    let tr = e.trace();
    0.5 * lame.lambda * tr * tr + lame.mu * (e.xx * e.xx + e.yy * e.yy + 2.0 * e.xy * e.xy)
}

fn spectral_part(sp: &Spectral, f: impl Fn(f64) -> f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (value, n) in sp.values.iter().zip(sp.vectors.iter()) {
        let fv = f(*value);
        out[0] += fv * n[0] * n[0];
        out[1] += fv * n[1] * n[1];
        out[2] += fv * n[0] * n[1];
    }
    out
}

/// σ = (g(d)+k)[λ⟨tr ε⟩₊ I + 2μ ε₊] + [λ⟨tr ε⟩₋ I + 2μ ε₋].
pub fn stress(e: &Strain2D, d: f64, lame: &Lame, k: f64) -> Stress2D {
    let sp = eigen2(e);
    let tr = e.trace();
    let g = (1.0 - d) * (1.0 - d) + k;
    let ep = spectral_part(&sp, pos);
    let en = spectral_part(&sp, neg);
    let (lp, ln) = (lame.lambda * pos(tr), lame.lambda * neg(tr));
    let mu2 = 2.0 * lame.mu;
    Stress2D {
        xx: g * (lp + mu2 * ep[0]) + ln + mu2 * en[0],
        yy: g * (lp + mu2 * ep[1]) + ln + mu2 * en[1],
        xy: g * mu2 * ep[2] + mu2 * en[2],
    }
}

/// Relative tolerance below which the two eigenvalues are treated as equal.
const TIE_TOLERANCE: f64 = 1e-12;

/// Consistent tangent ∂σ/∂ε as a symmetric 3×3 Voigt matrix (engineering shear).
pub fn tangent(e: &Strain2D, d: f64, lame: &Lame, k: f64) -> [[f64; 3]; 3] {
    let sp = eigen2(e);
    let [e1, e2] = sp.values;
    let tie = (e1 - e2).abs() < TIE_TOLERANCE * f64::max(1.0, e1.abs() + e2.abs());

    let dp = [step_plus(e1), step_plus(e2)];
    let theta_p = if tie {
        dp[0]
    } else {
        (pos(e1) - pos(e2)) / (e1 - e2)
    };
    let theta_n = if tie {
        1.0 - dp[0]
    } else {
        (neg(e1) - neg(e2)) / (e1 - e2)
    };
    let tr_p = step_plus(e.trace());

    let g = (1.0 - d) * (1.0 - d) + k;
    let [n1, n2] = sp.vectors;
    let mu2 = 2.0 * lame.mu;

    // basis tensors for Voigt columns: ε_xx, ε_yy, γ_xy (ε_xy = γ/2)
    let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]];
    let mut c = [[0.0; 3]; 3];
    for (j, de) in basis.iter().enumerate() {
        let proj = |a: [f64; 2], b: [f64; 2]| {
            a[0] * (de[0] * b[0] + de[2] * b[1]) + a[1] * (de[2] * b[0] + de[1] * b[1])
        };
        let d11 = proj(n1, n1);
        let d22 = proj(n2, n2);
        let d12 = proj(n1, n2);
        let dtr = de[0] + de[1];

        // d(ε₊) and d(ε₋) in the global frame
        let mut dplus = [0.0; 3];
        let mut dminus = [0.0; 3];
        let comps = [
            (n1, n1, dp[0] * d11, (1.0 - dp[0]) * d11),
            (n2, n2, dp[1] * d22, (1.0 - dp[1]) * d22),
        ];
        for (a, b, wp, wn) in comps {
            dplus[0] += wp * a[0] * b[0];
            dplus[1] += wp * a[1] * b[1];
            dplus[2] += wp * a[0] * b[1];
            dminus[0] += wn * a[0] * b[0];
            dminus[1] += wn * a[1] * b[1];
            dminus[2] += wn * a[0] * b[1];
        }
        // off-diagonal eigenframe term: θ d'₁₂ (n1⊗n2 + n2⊗n1)
        let sym = [
            2.0 * n1[0] * n2[0],
            2.0 * n1[1] * n2[1],
            n1[0] * n2[1] + n1[1] * n2[0],
        ];
        for i in 0..3 {
            dplus[i] += theta_p * d12 * sym[i];
            dminus[i] += theta_n * d12 * sym[i];
        }

        let lp = lame.lambda * tr_p * dtr;
        let ln = lame.lambda * (1.0 - tr_p) * dtr;
        c[0][j] = g * (lp + mu2 * dplus[0]) + ln + mu2 * dminus[0];
        c[1][j] = g * (lp + mu2 * dplus[1]) + ln + mu2 * dminus[1];
        c[2][j] = g * mu2 * dplus[2] + mu2 * dminus[2];
    }
    c
}

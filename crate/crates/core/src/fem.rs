//! Bilinear quadrilateral elements with 2×2 Gauss quadrature, the element
//! systems of both fields, and global assembly with Dirichlet elimination.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::material::Lame;
use crate::mesh::Mesh;
use crate::model::{crack_function_unchecked, degradation_unchecked, driving_history, ModelConfig};
use crate::sparse::CsrMatrix;
use crate::split::{stress, tangent, Strain2D};

const GAUSS: f64 = 0.577_350_269_189_625_8;
/// Reference coordinates of the quadrature points, counter-clockwise.
pub const GAUSS_POINTS: [[f64; 2]; 4] = [
    [-GAUSS, -GAUSS],
    [GAUSS, -GAUSS],
    [GAUSS, GAUSS],
    [-GAUSS, GAUSS],
];
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Shape functions and their reference derivatives at (ξ, η).
pub fn shape_q4(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 2]; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + c[0] * xi) * (1.0 + c[1] * eta);
        dn[a] = [
            0.25 * c[0] * (1.0 + c[1] * eta),
            0.25 * c[1] * (1.0 + c[0] * xi),
        ];
    }
    (n, dn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub n: [f64; 4],
    /// Physical shape-function gradients.
    pub dndx: [[f64; 2]; 4],
    /// Gauss weight times det J.
    pub weight: f64,
}

impl QuadPoint {
    pub fn interpolate(&self, nodal: &[f64; 4]) -> f64 {
        self.n.iter().zip(nodal).map(|(n, v)| n * v).sum()
    }

    pub fn gradient(&self, nodal: &[f64; 4]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (dn, v) in self.dndx.iter().zip(nodal) {
            g[0] += dn[0] * v;
            g[1] += dn[1] * v;
        }
        g
    }

    /// Small strain from element displacements ordered [u0x, u0y, u1x, ...].
    pub fn strain(&self, ue: &[f64; 8]) -> Strain2D {
        let mut v = [0.0; 3];
        for (a, dn) in self.dndx.iter().enumerate() {
            let (ux, uy) = (ue[2 * a], ue[2 * a + 1]);
            v[0] += dn[0] * ux;
            v[1] += dn[1] * uy;
            v[2] += dn[1] * ux + dn[0] * uy;
        }
        Strain2D::from_voigt(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub points: [QuadPoint; 4],
}

impl ElementGeometry {
    pub fn area(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

pub fn element_geometry(coords: &[[f64; 2]; 4]) -> Result<ElementGeometry> {
    let mut points = [QuadPoint {
        n: [0.0; 4],
        dndx: [[0.0; 2]; 4],
        weight: 0.0,
    }; 4];
    for (p, g) in points.iter_mut().zip(GAUSS_POINTS) {
        let (n, dn) = shape_q4(g[0], g[1]);
        let mut j = [[0.0; 2]; 2];
        for a in 0..4 {
            for r in 0..2 {
                for c in 0..2 {
                    j[r][c] += dn[a][r] * coords[a][c];
                }
            }
        }
        // j[r][c] = ∂x_c/∂ξ_r
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det > 0.0) {
            return Err(Error::Mesh(format!("non-positive Jacobian {det:.3e}")));
        }
        let inv = [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ];
        let mut dndx = [[0.0; 2]; 4];
        for a in 0..4 {
            for c in 0..2 {
                dndx[a][c] = inv[c][0] * dn[a][0] + inv[c][1] * dn[a][1];
            }
        }
        *p = QuadPoint {
            n,
            dndx,
            weight: det,
        };
    }
    Ok(ElementGeometry { points })
}

/// Precomputed quadrature data for every element of a mesh.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    num_nodes: usize,
    connectivity: Vec<[usize; 4]>,
    elements: Vec<ElementGeometry>,
}

impl MeshGeometry {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let elements = (0..mesh.num_elements())
            .map(|e| {
                element_geometry(&mesh.element_coords(e))
                    .map_err(|_| Error::Mesh(format!("element {e} has a non-positive Jacobian")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeshGeometry {
            num_nodes: mesh.num_nodes(),
            connectivity: mesh.elements.clone(),
            elements,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_points(&self) -> usize {
        4 * self.elements.len()
    }

    pub fn connectivity(&self) -> &[[usize; 4]] {
        &self.connectivity
    }

    pub fn element(&self, e: usize) -> &ElementGeometry {
        &self.elements[e]
    }

    pub fn elements(&self) -> impl Iterator<Item = (&[usize; 4], &ElementGeometry)> {
        self.connectivity.iter().zip(&self.elements)
    }

    pub fn area(&self) -> f64 {
        self.elements.iter().map(ElementGeometry::area).sum()
    }

    pub fn gather_scalar(&self, e: usize, field: &[f64]) -> [f64; 4] {
        self.connectivity[e].map(|n| field[n])
    }

    pub fn gather_vector(&self, e: usize, field: &[f64]) -> [f64; 8] {
        let c = &self.connectivity[e];
        let mut out = [0.0; 8];
        for a in 0..4 {
            out[2 * a] = field[2 * c[a]];
            out[2 * a + 1] = field[2 * c[a] + 1];
        }
        out
    }

    /// Strains at every quadrature point, element-major.
    pub fn strains(&self, u: &[f64]) -> Vec<Strain2D> {
        (0..self.num_elements())
            .into_par_iter()
            .flat_map_iter(|e| {
                let ue = self.gather_vector(e, u);
                self.elements[e].points.map(|p| p.strain(&ue))
            })
            .collect()
    }

    /// Nodal phase field interpolated to every quadrature point.
    pub fn phase_at_points(&self, d: &[f64]) -> Vec<f64> {
        (0..self.num_elements())
            .flat_map(|e| {
                let de = self.gather_scalar(e, d);
                self.elements[e].points.map(|p| p.interpolate(&de))
            })
            .collect()
    }
}

/// Residual r = ∫Bᵀσ and tangent K = ∫BᵀCB for one element.
pub fn element_displacement_system(
    geom: &ElementGeometry,
    ue: &[f64; 8],
    d_at_points: &[f64; 4],
    lame: &Lame,
    residual_stiffness: f64,
) -> ([f64; 8], [[f64; 8]; 8]) {
    let mut r = [0.0; 8];
    let mut k = [[0.0; 8]; 8];
    for (p, &d) in geom.points.iter().zip(d_at_points) {
        let eps = p.strain(ue);
        let s = stress(&eps, d, lame, residual_stiffness).voigt();
        let c = tangent(&eps, d, lame, residual_stiffness);
        let b = b_matrix(p);
        let mut cb = [[0.0; 8]; 3];
        for i in 0..3 {
            for col in 0..8 {
                cb[i][col] = (0..3).map(|m| c[i][m] * b[m][col]).sum();
            }
        }
        for row in 0..8 {
            r[row] += p.weight * (0..3).map(|i| b[i][row] * s[i]).sum::<f64>();
            for col in 0..8 {
                k[row][col] += p.weight * (0..3).map(|i| b[i][row] * cb[i][col]).sum::<f64>();
            }
        }
    }
    (r, k)
}

fn b_matrix(p: &QuadPoint) -> [[f64; 8]; 3] {
    let mut b = [[0.0; 8]; 3];
    for (a, dn) in p.dndx.iter().enumerate() {
        b[0][2 * a] = dn[0];
        b[1][2 * a + 1] = dn[1];
        b[2][2 * a] = dn[1];
        b[2][2 * a + 1] = dn[0];
    }
    b
}

/// Consistent nodal loads of a uniform body force.
pub fn element_body_force(geom: &ElementGeometry, b: [f64; 2]) -> [f64; 8] {
    let mut f = [0.0; 8];
    for p in &geom.points {
        for a in 0..4 {
            f[2 * a] += p.weight * p.n[a] * b[0];
            f[2 * a + 1] += p.weight * p.n[a] * b[1];
        }
    }
    f
}

/// Residual and tangent of the phase-field equation for one element.
pub fn element_phase_system(
    geom: &ElementGeometry,
    de: &[f64; 4],
    history: &[f64; 4],
    config: &ModelConfig,
    gc: f64,
) -> ([f64; 4], [[f64; 4]; 4]) {
    let l = config.length_scale;
    let cw = config.cw();
    let local = gc / (4.0 * cw * l);
    let diffusive = gc * l / (2.0 * cw);
    let mut r = [0.0; 4];
    let mut k = [[0.0; 4]; 4];
    for (p, &h) in geom.points.iter().zip(history) {
        let d = p.interpolate(de);
        let grad = p.gradient(de);
        let (_, dw, ddw) = crack_function_unchecked(config.density, d);
        let (_, dg, ddg) = degradation_unchecked(d);
        let hd = driving_history(h, config, gc);
        let source = local * dw + dg * hd;
        let slope = local * ddw + ddg * hd;
        for i in 0..4 {
            let gi = p.dndx[i];
            r[i] += p.weight * (source * p.n[i] + diffusive * (gi[0] * grad[0] + gi[1] * grad[1]));
            for j in 0..4 {
                let gj = p.dndx[j];
                k[i][j] += p.weight
                    * (slope * p.n[i] * p.n[j] + diffusive * (gi[0] * gj[0] + gi[1] * gj[1]));
            }
        }
    }
    (r, k)
}

/// How the local (non-gradient) terms of the phase-field element are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseReaction {
    /// Gauss quadrature of the interpolated field.
    Consistent,
    /// Row-sum lumped: each Gauss weight is split over the nodes by shape
    /// function and the local terms are evaluated at nodal values. Keeps the
    /// phase-field matrix an M-matrix on non-obtuse meshes, so nodal damage
    /// cannot drop when the history grows.
    #[default]
    Lumped,
}

impl FromStr for PhaseReaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(PhaseReaction::Consistent),
            "lumped" => Ok(PhaseReaction::Lumped),
            other => Err(Error::invalid(format!(
                "unknown phase reaction `{other}` (expected consistent or lumped)"
            ))),
        }
    }
}

impl PhaseReaction {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseReaction::Consistent => "consistent",
            PhaseReaction::Lumped => "lumped",
        }
    }
}

/// Phase-field residual and tangent with a selectable integration of the
/// local terms. The gradient term always uses Gauss quadrature.
pub fn element_phase_system_with(
    geom: &ElementGeometry,
    de: &[f64; 4],
    history: &[f64; 4],
    config: &ModelConfig,
    gc: f64,
    reaction: PhaseReaction,
) -> ([f64; 4], [[f64; 4]; 4]) {
    if reaction == PhaseReaction::Consistent {
        return element_phase_system(geom, de, history, config, gc);
    }
    let l = config.length_scale;
    let cw = config.cw();
    let local = gc / (4.0 * cw * l);
    let diffusive = gc * l / (2.0 * cw);
    let nodal: [[f64; 4]; 4] = de.map(|d| {
        let (_, dw, ddw) = crack_function_unchecked(config.density, d);
        let (_, dg, ddg) = degradation_unchecked(d);
        [local * dw, local * ddw, dg, ddg]
    });
    let mut r = [0.0; 4];
    let mut k = [[0.0; 4]; 4];
    for (p, &h) in geom.points.iter().zip(history) {
        let grad = p.gradient(de);
        let hd = driving_history(h, config, gc);
        for i in 0..4 {
            let gi = p.dndx[i];
            let [s0, ds0, dg, ddg] = nodal[i];
            let m = p.weight * p.n[i];
            r[i] += m * (s0 + dg * hd) + p.weight * diffusive * (gi[0] * grad[0] + gi[1] * grad[1]);
            k[i][i] += m * (ds0 + ddg * hd);
            for j in 0..4 {
                let gj = p.dndx[j];
                k[i][j] += p.weight * diffusive * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    (r, k)
}

/// Global sparsity pattern with per-element scatter slots.
#[derive(Debug, Clone)]
pub struct DofPattern {
    dofs_per_node: usize,
    template: CsrMatrix,
    element_dofs: Vec<Vec<usize>>,
    slots: Vec<Vec<usize>>,
}

impl DofPattern {
    pub fn new(connectivity: &[[usize; 4]], num_nodes: usize, dofs_per_node: usize) -> Self {
        let element_dofs: Vec<Vec<usize>> = connectivity
            .iter()
            .map(|conn| {
                conn.iter()
                    .flat_map(|&n| (0..dofs_per_node).map(move |c| n * dofs_per_node + c))
                    .collect()
            })
            .collect();
        let n = num_nodes * dofs_per_node;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in &element_dofs {
            for &i in dofs {
                rows[i].extend_from_slice(dofs);
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(i);
            row.sort_unstable();
            row.dedup();
        }
        let template = CsrMatrix::from_rows(n, &rows);
        let slots = element_dofs
            .iter()
            .map(|dofs| {
                let mut s = Vec::with_capacity(dofs.len() * dofs.len());
                for &i in dofs {
                    for &j in dofs {
                        s.push(template.position(i, j).expect("pattern covers element"));
                    }
                }
                s
            })
            .collect();
        DofPattern {
            dofs_per_node,
            template,
            element_dofs,
            slots,
        }
    }

    pub fn dimension(&self) -> usize {
        self.template.nrows()
    }

    pub fn dofs_per_node(&self) -> usize {
        self.dofs_per_node
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.element_dofs[e]
    }

    pub fn num_elements(&self) -> usize {
        self.element_dofs.len()
    }
}

/// Residual and row-major tangent of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSystem {
    pub residual: Vec<f64>,
    pub stiffness: Vec<f64>,
}

impl<const N: usize> From<([f64; N], [[f64; N]; N])> for ElementSystem {
    fn from((r, k): ([f64; N], [[f64; N]; N])) -> Self {
        ElementSystem {
            residual: r.to_vec(),
            stiffness: k.iter().flatten().copied().collect(),
        }
    }
}

/// Unreduced global residual and tangent.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub residual: Vec<f64>,
}

/// Scatter element systems in element order.
pub fn assemble_global(pattern: &DofPattern, systems: &[ElementSystem]) -> Result<GlobalSystem> {
    if systems.len() != pattern.num_elements() {
        return Err(Error::Dimension(format!(
            "{} element systems for {} elements",
            systems.len(),
            pattern.num_elements()
        )));
    }
    let mut matrix = pattern.template.clone();
    let mut residual = vec![0.0; pattern.dimension()];
    let values = matrix.values_mut();
    for (e, sys) in systems.iter().enumerate() {
        let dofs = &pattern.element_dofs[e];
        let m = dofs.len();
        if sys.residual.len() != m || sys.stiffness.len() != m * m {
            return Err(Error::Dimension(format!(
                "element {e} system has {} residual and {} stiffness entries, expected {m} and {}",
                sys.residual.len(),
                sys.stiffness.len(),
                m * m
            )));
        }
        for (a, &i) in dofs.iter().enumerate() {
            residual[i] += sys.residual[a];
        }
        for (slot, v) in pattern.slots[e].iter().zip(&sys.stiffness) {
            values[*slot] += v;
        }
    }
    Ok(GlobalSystem { matrix, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub dof: usize,
    /// Prescribed increment of the unknown.
    pub value: f64,
}

/// Newton system K_ff Δu_f = rhs after eliminating constrained unknowns.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub dimension: usize,
}

impl SparseSystem {
    /// Full-length increment from a reduced solution.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.dimension];
        for (&i, &v) in self.free.iter().zip(reduced) {
            full[i] = v;
        }
        for c in &self.constraints {
            full[c.dof] = c.value;
        }
        full
    }
}

impl GlobalSystem {
    /// Eliminate constrained rows and columns, lifting the prescribed values
    /// into the right-hand side: rhs = −r_f − K_fc Δu_c.
    pub fn reduce(&self, constraints: &[Constraint]) -> Result<SparseSystem> {
        let n = self.matrix.nrows();
        let mut prescribed = vec![None; n];
        for c in constraints {
            if c.dof >= n {
                return Err(Error::Dimension(format!(
                    "constraint on dof {} of {n}",
                    c.dof
                )));
            }
            prescribed[c.dof] = Some(c.value);
        }
        let mut map = vec![usize::MAX; n];
        let mut free = Vec::with_capacity(n);
        for i in 0..n {
            if prescribed[i].is_none() {
                map[i] = free.len();
                free.push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(free.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut rhs = Vec::with_capacity(free.len());
        row_ptr.push(0);
        for &i in &free {
            let mut b = -self.residual[i];
            for (j, v) in self.matrix.row(i) {
                match prescribed[j] {
                    Some(p) => b -= v * p,
                    None => {
                        cols.push(map[j]);
                        vals.push(v);
                    }
                }
            }
            rhs.push(b);
            row_ptr.push(cols.len());
        }
        let mut unique: Vec<Constraint> = constraints.to_vec();
        unique.sort_by_key(|c| c.dof);
        unique.dedup_by_key(|c| c.dof);
        Ok(SparseSystem {
            matrix: CsrMatrix::from_raw(free.len(), row_ptr, cols, vals),
            rhs,
            free,
            constraints: unique,
            dimension: n,
        })
    }
}

impl GlobalSystem {
    /// Constraints applied without changing the sparsity pattern: constrained
    /// rows and columns become scaled identity rows and the prescribed values
    /// are lifted into the right-hand side. Returns the full-size matrix, the
    /// right-hand side, and the norm of the right-hand side over free rows.
    pub fn constrain_in_place(
        &self,
        constraints: &[Constraint],
    ) -> Result<(CsrMatrix, Vec<f64>, f64)> {
        let n = self.matrix.nrows();
        let mut prescribed = vec![None; n];
        for c in constraints {
            if c.dof >= n {
                return Err(Error::Dimension(format!(
                    "constraint on dof {} of {n}",
                    c.dof
                )));
            }
            prescribed[c.dof] = Some(c.value);
        }
        let scale = (0..n)
            .fold(0.0f64, |m, i| m.max(self.matrix.get(i, i).abs()))
            .max(1.0);
        let mut matrix = self.matrix.clone();
        let mut rhs: Vec<f64> = self.residual.iter().map(|r| -r).collect();
        let mut free_sq = 0.0;
        for i in 0..n {
            let range = matrix.row_range(i);
            let (cols, vals) = matrix.row_parts_mut(range);
            if let Some(p) = prescribed[i] {
                for (j, v) in cols.iter().zip(vals.iter_mut()) {
                    *v = if *j == i { scale } else { 0.0 };
                }
                rhs[i] = scale * p;
            } else {
                for (j, v) in cols.iter().zip(vals.iter_mut()) {
                    if let Some(p) = prescribed[*j] {
                        rhs[i] -= *v * p;
                        *v = 0.0;
                    }
                }
                free_sq += rhs[i] * rhs[i];
            }
        }
        Ok((matrix, rhs, free_sq.sqrt()))
    }
}

/// Assemble element systems and eliminate constraints in one call.
pub fn assemble(
    pattern: &DofPattern,
    systems: &[ElementSystem],
    constraints: &[Constraint],
) -> Result<SparseSystem> {
    assemble_global(pattern, systems)?.reduce(constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::lame_constants;
    use crate::mesh::generate_structured;
    use crate::model::{initial_history, CrackDensity};
    use rand::{Rng, SeedableRng};

    fn lame() -> Lame {
        lame_constants(210.0, 0.3).unwrap()
    }

    fn distorted() -> [[f64; 2]; 4] {
        [[0.0, 0.0], [1.2, 0.1], [1.0, 0.9], [-0.1, 1.1]]
    }

    #[test]
    fn shape_functions() {
        let (n, _) = shape_q4(0.0, 0.0);
        assert_eq!(n, [0.25; 4]);
        let (n, _) = shape_q4(-1.0, -1.0);
        assert_eq!(n, [1.0, 0.0, 0.0, 0.0]);
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..100 {
            let (x, y) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (n, dn) = shape_q4(x, y);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(dn.iter().map(|d| d[0]).sum::<f64>().abs() < 1e-15);
            assert!(dn.iter().map(|d| d[1]).sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn geometry_area_and_orientation() {
        let g = element_geometry(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!((g.area() - 2.0).abs() < 1e-14);
        assert!(element_geometry(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn uniaxial_strain_recovers_e22() {
        let g = element_geometry(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let e = 0.001;
        let ue = [0.0, 0.0, 0.0, 0.0, 0.0, e, 0.0, e];
        for p in &g.points {
            let s = stress(&p.strain(&ue), 0.0, &lame(), 0.0);
            assert!((s.yy - 282.692_307_692_307_7 * e).abs() < 1e-12);
        }
        let (r, _) = element_displacement_system(&g, &[0.0; 8], &[0.0; 4], &lame(), 1e-7);
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn displacement_tangent_matches_finite_differences() {
        let g = element_geometry(&distorted()).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let ue: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-0.01..0.01));
            let d: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..0.9));
            let (_, k) = element_displacement_system(&g, &ue, &d, &lame(), 1e-7);
            let step = 1e-7;
            for j in 0..8 {
                let mut up = ue;
                let mut dn = ue;
                up[j] += step;
                dn[j] -= step;
                let (rp, _) = element_displacement_system(&g, &up, &d, &lame(), 1e-7);
                let (rm, _) = element_displacement_system(&g, &dn, &d, &lame(), 1e-7);
                let scale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                for i in 0..8 {
                    let fd = (rp[i] - rm[i]) / (2.0 * step);
                    assert!(
                        (fd - k[i][j]).abs() < 1e-6 * scale,
                        "{i},{j}: {fd} vs {}",
                        k[i][j]
                    );
                }
            }
            for i in 0..8 {
                for j in 0..8 {
                    assert!((k[i][j] - k[j][i]).abs() < 1e-9 * k[i][i].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn phase_residual_examples() {
        let g = element_geometry(&distorted()).unwrap();
        let c0 = ModelConfig::new(CrackDensity::Quadratic, 0.01).unwrap();
        let (r, _) = element_phase_system(&g, &[0.0; 4], &[0.0; 4], &c0, 5e-3);
        assert!(r.iter().all(|v| v.abs() < 1e-18));

        let c1 = ModelConfig::new(CrackDensity::Linear, 0.01).unwrap();
        let h0 = initial_history(&c1, 5e-3);
        let (r, _) = element_phase_system(&g, &[0.0; 4], &[h0; 4], &c1, 5e-3);
        assert!(r.iter().all(|v| v.abs() < 1e-15), "{r:?}");
    }

    #[test]
    fn uniform_phase_matches_pointwise_balance() {
        let g = element_geometry(&distorted()).unwrap();
        for xi in 0..3 {
            let c = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.01).unwrap();
            let (d, h, gc) = (0.3, 0.7, 5e-3);
            let (r, _) = element_phase_system(&g, &[d; 4], &[h; 4], &c, gc);
            let (_, dw, _) = crack_function_unchecked(c.density, d);
            let pointwise = gc / (4.0 * c.cw() * 0.01) * dw - 2.0 * (1.0 - d) * h;
            let total: f64 = r.iter().sum();
            assert!((total - pointwise * g.area()).abs() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn phase_tangent_matches_finite_differences() {
        let g = element_geometry(&distorted()).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for (xi, reaction) in
            (0..3).flat_map(|xi| [(xi, PhaseReaction::Consistent), (xi, PhaseReaction::Lumped)])
        {
            let c = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.05).unwrap();
            for _ in 0..20 {
                let de: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.05..0.95));
                let h: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..2.0));
                let (_, k) = element_phase_system_with(&g, &de, &h, &c, 5e-3, reaction);
                let scale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                for j in 0..4 {
                    let step = 1e-6;
                    let mut up = de;
                    let mut dn = de;
                    up[j] += step;
                    dn[j] -= step;
                    let (rp, _) = element_phase_system_with(&g, &up, &h, &c, 5e-3, reaction);
                    let (rm, _) = element_phase_system_with(&g, &dn, &h, &c, 5e-3, reaction);
                    for i in 0..4 {
                        let fd = (rp[i] - rm[i]) / (2.0 * step);
                        assert!((fd - k[i][j]).abs() < 1e-6 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn lumped_matches_consistent_for_uniform_damage() {
        let g = element_geometry(&distorted()).unwrap();
        for xi in 0..3 {
            let c = ModelConfig::new(CrackDensity::from_xi(xi).unwrap(), 0.05).unwrap();
            let h = [0.3, 0.9, 1.4, 0.2];
            let (rc, _) =
                element_phase_system_with(&g, &[0.4; 4], &h, &c, 5e-3, PhaseReaction::Consistent);
            let (rl, _) =
                element_phase_system_with(&g, &[0.4; 4], &h, &c, 5e-3, PhaseReaction::Lumped);
            for i in 0..4 {
                assert!((rc[i] - rl[i]).abs() < 1e-14, "xi={xi}");
            }
        }
    }

    #[test]
    fn lumped_phase_matrix_has_no_positive_coupling() {
        let mesh = generate_structured(1.0, 1.0, 4, 4, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let c = ModelConfig::new(CrackDensity::Quadratic, 0.01).unwrap();
        let (_, k) = element_phase_system_with(
            geo.element(0),
            &[0.5; 4],
            &[50.0; 4],
            &c,
            5e-3,
            PhaseReaction::Lumped,
        );
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(k[i][j] <= 1e-15, "k[{i}][{j}] = {}", k[i][j]);
                }
            }
        }
        let (_, k) = element_phase_system(geo.element(0), &[0.5; 4], &[50.0; 4], &c, 5e-3);
        assert!(k[0][2] > 0.0);
    }

    #[test]
    fn reduced_single_element() {
        let mesh = generate_structured(1.0, 1.0, 1, 1, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let pattern = DofPattern::new(geo.connectivity(), geo.num_nodes(), 2);
        let sys: ElementSystem =
            element_displacement_system(geo.element(0), &[0.0; 8], &[0.0; 4], &lame(), 0.0).into();
        let constraints: Vec<Constraint> = [0, 1, 2, 3]
            .iter()
            .map(|&dof| Constraint { dof, value: 0.0 })
            .collect();
        let reduced = assemble(&pattern, &[sys], &constraints).unwrap();
        assert_eq!(reduced.matrix.nrows(), 4);
        assert_eq!(reduced.free, vec![4, 5, 6, 7]);
    }

    #[test]
    fn in_place_constraints_match_reduction() {
        let mesh = generate_structured(2.0, 1.0, 2, 1, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let pattern = DofPattern::new(geo.connectivity(), geo.num_nodes(), 2);
        let u: Vec<f64> = (0..pattern.dimension())
            .map(|i| 1e-3 * (i as f64).sin())
            .collect();
        let systems: Vec<ElementSystem> = (0..geo.num_elements())
            .map(|e| {
                element_displacement_system(
                    geo.element(e),
                    &geo.gather_vector(e, &u),
                    &[0.2; 4],
                    &lame(),
                    1e-7,
                )
                .into()
            })
            .collect();
        let global = assemble_global(&pattern, &systems).unwrap();
        let constraints = [
            Constraint { dof: 0, value: 0.0 },
            Constraint { dof: 1, value: 0.0 },
            Constraint { dof: 3, value: 0.0 },
            Constraint {
                dof: 9,
                value: 2e-3,
            },
        ];
        let reduced = global.reduce(&constraints).unwrap();
        let x = crate::sparse::solve_symmetric(&reduced.matrix, &reduced.rhs).unwrap();
        let expect = reduced.expand(&x);
        let (m, rhs, _) = global.constrain_in_place(&constraints).unwrap();
        let got = crate::sparse::solve_symmetric(&m, &rhs).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_element_strip_dimension() {
        let mesh = generate_structured(2.0, 1.0, 2, 1, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let pattern = DofPattern::new(geo.connectivity(), geo.num_nodes(), 2);
        assert_eq!(pattern.dimension(), 12);
    }

    #[test]
    fn assembled_matrix_symmetric_on_random_meshes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..5 {
            let mut mesh = generate_structured(1.0, 1.0, 4, 3, None).unwrap();
            for p in mesh.nodes.iter_mut() {
                p[0] += rng.gen_range(-0.04..0.04);
                p[1] += rng.gen_range(-0.04..0.04);
            }
            let geo = MeshGeometry::new(&mesh).unwrap();
            let pattern = DofPattern::new(geo.connectivity(), geo.num_nodes(), 2);
            let u: Vec<f64> = (0..pattern.dimension())
                .map(|_| rng.gen_range(-0.01..0.01))
                .collect();
            let systems: Vec<ElementSystem> = (0..geo.num_elements())
                .map(|e| {
                    let d: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
                    element_displacement_system(
                        geo.element(e),
                        &geo.gather_vector(e, &u),
                        &d,
                        &lame(),
                        1e-7,
                    )
                    .into()
                })
                .collect();
            let global = assemble_global(&pattern, &systems).unwrap();
            let dense = global.matrix.to_dense();
            let n = dense.len();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((dense[i][j] - dense[j][i]).abs());
                }
            }
            assert!(worst < 1e-12, "{worst}");
        }
    }

    #[test]
    fn lift_moves_prescribed_values_to_rhs() {
        let mesh = generate_structured(1.0, 1.0, 1, 1, None).unwrap();
        let geo = MeshGeometry::new(&mesh).unwrap();
        let pattern = DofPattern::new(geo.connectivity(), geo.num_nodes(), 2);
        let (r, k) =
            element_displacement_system(geo.element(0), &[0.0; 8], &[0.0; 4], &lame(), 0.0);
        let global = assemble_global(&pattern, &[(r, k).into()]).unwrap();
        let dense = global.matrix.to_dense();
        let sys = global
            .reduce(&[Constraint {
                dof: 5,
                value: 0.01,
            }])
            .unwrap();
        // rhs_f = −K_f5 · 0.01
        for (row, &i) in sys.free.iter().enumerate() {
            assert!((sys.rhs[row] + dense[i][5] * 0.01).abs() < 1e-15);
        }
        let full = sys.expand(&vec![0.0; sys.free.len()]);
        assert_eq!(full[5], 0.01);
    }
}

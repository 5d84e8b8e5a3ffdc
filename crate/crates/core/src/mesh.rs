//! Quadrilateral meshes: structured generation with an optional crack seam,
//! node-set bookkeeping, and the `pfmesh` ASCII format.
//!
//! ```text
//! pfmesh 1
//! nodes N
//! x y                      (N lines)
//! elements M
//! i0 i1 i2 i3              (M lines, 0-based, counter-clockwise)
//! set <name> K             (optional, followed by K indices)
//! seam x0 y0 x1 y1 K       (optional, followed by K "original duplicate" pairs)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::element_geometry;

/// Which side of the crack line receives the duplicated nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeamSide {
    /// Elements with larger normal coordinate (above a horizontal crack,
    /// right of a vertical one).
    #[default]
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub side: SeamSide,
}

impl CrackSpec {
    pub fn new(start: [f64; 2], end: [f64; 2]) -> Self {
        CrackSpec {
            start,
            end,
            side: SeamSide::Positive,
        }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

/// A crack realized as coincident but topologically distinct node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Seam {
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// (original, duplicate) node indices.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub seam: Option<Seam>,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Mesh(format!("unknown node set `{name}`")))
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    /// Bounding box as ([xmin, ymin], [xmax, ymax]).
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, conn) in self.elements.iter().enumerate() {
            if let Some(&bad) = conn.iter().find(|&&i| i >= n) {
                return Err(Error::Mesh(format!(
                    "element {e} references node {bad} but the mesh has {n} nodes"
                )));
            }
            for a in 0..4 {
                for b in a + 1..4 {
                    if conn[a] == conn[b] {
                        return Err(Error::Mesh(format!(
                            "element {e} is degenerate (node {} repeated)",
                            conn[a]
                        )));
                    }
                }
            }
            element_geometry(&self.element_coords(e))
                .map_err(|_| Error::Mesh(format!("element {e} has a non-positive Jacobian")))?;
        }
        for (name, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::Mesh(format!(
                    "node set `{name}` references missing node {bad}"
                )));
            }
        }
        if let Some(seam) = &self.seam {
            for &(a, b) in &seam.pairs {
                if a >= n || b >= n {
                    return Err(Error::Mesh(format!("seam pair ({a}, {b}) out of range")));
                }
            }
        }
        Ok(())
    }
}

const GRID_TOL: f64 = 1e-9;

fn grid_index(value: f64, spacing: f64, count: usize, what: &str) -> Result<usize> {
    let t = value / spacing;
    let r = t.round();
    if (t - r).abs() > GRID_TOL * (count as f64).max(1.0) || r < 0.0 || r > count as f64 {
        return Err(Error::Mesh(format!(
            "crack {what} {value} is not on a grid line"
        )));
    }
    Ok(r as usize)
}

/// Structured `nx × ny` grid of `width × height` with an optional crack seam
/// along a grid line. Endpoints on the outer boundary are split; interior
/// endpoints are crack tips and stay connected.
pub fn generate_structured(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    crack: Option<&CrackSpec>,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh(format!(
            "divisions must be at least 1, got {nx}×{ny}"
        )));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::Mesh(format!(
            "domain {width}×{height} must have positive size"
        )));
    }
    let dx = width / nx as f64;
    let dy = height / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 * dx, j as f64 * dy]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }

    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    sets.insert("bottom".into(), (0..=nx).map(|i| id(i, 0)).collect());
    sets.insert("top".into(), (0..=nx).map(|i| id(i, ny)).collect());
    sets.insert("left".into(), (0..=ny).map(|j| id(0, j)).collect());
    sets.insert("right".into(), (0..=ny).map(|j| id(nx, j)).collect());

    let mut seam = None;
    if let Some(c) = crack {
        let horizontal = (c.start[1] - c.end[1]).abs() <= GRID_TOL * height;
        let vertical = (c.start[0] - c.end[0]).abs() <= GRID_TOL * width;
        if horizontal == vertical {
            return Err(Error::Mesh(
                "crack must be a nonzero horizontal or vertical segment".into(),
            ));
        }
        // (line index, range along the line) in grid units
        let (line, a, b, along_count) = if horizontal {
            let j = grid_index(c.start[1], dy, ny, "y")?;
            let i0 = grid_index(c.start[0], dx, nx, "x")?;
            let i1 = grid_index(c.end[0], dx, nx, "x")?;
            (j, i0.min(i1), i0.max(i1), nx)
        } else {
            let i = grid_index(c.start[0], dx, nx, "x")?;
            let j0 = grid_index(c.start[1], dy, ny, "y")?;
            let j1 = grid_index(c.end[1], dy, ny, "y")?;
            (i, j0.min(j1), j0.max(j1), ny)
        };
        let cross_count = if horizontal { ny } else { nx };
        if line == 0 || line == cross_count {
            return Err(Error::Mesh("crack lies on the outer boundary".into()));
        }
        if a == b {
            return Err(Error::Mesh("crack has zero length".into()));
        }
        let node_at = |s: usize| if horizontal { id(s, line) } else { id(line, s) };
        let split: Vec<usize> = (a..=b)
            .filter(|&s| {
                let on_boundary = s == 0 || s == along_count;
                let is_tip = (s == a || s == b) && !on_boundary;
                !is_tip
            })
            .collect();
        if split.is_empty() {
            return Err(Error::Mesh(
                "crack must span at least two element edges when both ends are interior".into(),
            ));
        }

        let mut pairs = Vec::with_capacity(split.len());
        let mut dup_of = BTreeMap::new();
        for &s in &split {
            let orig = node_at(s);
            let dup = nodes.len();
            nodes.push(nodes[orig]);
            pairs.push((orig, dup));
            dup_of.insert(orig, dup);
        }
        // elements adjacent to the seam on the chosen side
        let side_row = match c.side {
            SeamSide::Positive => line,
            SeamSide::Negative => line - 1,
        };
        for s in a..b {
            let e = if horizontal {
                side_row * nx + s
            } else {
                s * nx + side_row
            };
            for n in elements[e].iter_mut() {
                if let Some(&dup) = dup_of.get(n) {
                    *n = dup;
                }
            }
        }
        for members in sets.values_mut() {
            let extra: Vec<usize> = members
                .iter()
                .filter_map(|n| dup_of.get(n).copied())
                .collect();
            members.extend(extra);
        }
        seam = Some(Seam {
            start: c.start,
            end: c.end,
            pairs,
        });
    }

    let mesh = Mesh {
        nodes,
        elements,
        node_sets: sets,
        seam,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Shortest element edge over the mesh.
pub fn min_element_size(mesh: &Mesh) -> Result<f64> {
    if mesh.elements.is_empty() {
        return Err(Error::Mesh("empty mesh".into()));
    }
    let mut h = f64::INFINITY;
    for e in 0..mesh.num_elements() {
        let c = mesh.element_coords(e);
        for a in 0..4 {
            let b = (a + 1) % 4;
            h = h.min((c[b][0] - c[a][0]).hypot(c[b][1] - c[a][1]));
        }
    }
    Ok(h)
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("pfmesh 1\n");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let _ = writeln!(s, "{} {} {} {}", e[0], e[1], e[2], e[3]);
    }
    for (name, members) in &mesh.node_sets {
        let _ = writeln!(s, "set {name} {}", members.len());
        for chunk in members.chunks(16) {
            let line: Vec<String> = chunk.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    if let Some(seam) = &mesh.seam {
        let _ = writeln!(
            s,
            "seam {:.16e} {:.16e} {:.16e} {:.16e} {}",
            seam.start[0],
            seam.start[1],
            seam.end[0],
            seam.end[1],
            seam.pairs.len()
        );
        for (a, b) in &seam.pairs {
            let _ = writeln!(s, "{a} {b}");
        }
    }
    s
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-empty line, split into tokens.
    fn next_tokens(&mut self) -> Option<Vec<&'a str>> {
        for (i, raw) in self.iter.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                self.line = i + 1;
                return Some(toks);
            }
        }
        None
    }

    fn expect_tokens(&mut self, what: &str) -> Result<Vec<&'a str>> {
        self.next_tokens()
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn number<T: std::str::FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("invalid {what} `{tok}`")))
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines {
        path,
        iter: text.lines().enumerate().peekable(),
        line: 0,
    };
    let header = lines.expect_tokens("header")?;
    if header != ["pfmesh", "1"] {
        return Err(lines.err("expected header `pfmesh 1`"));
    }

    let t = lines.expect_tokens("`nodes N`")?;
    if t.len() != 2 || t[0] != "nodes" {
        return Err(lines.err("expected `nodes N`"));
    }
    let n: usize = lines.number(t[1], "node count")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let t = lines.expect_tokens("node coordinates")?;
        if t.len() != 2 {
            return Err(lines.err("expected `x y`"));
        }
        nodes.push([
            lines.number(t[0], "coordinate")?,
            lines.number(t[1], "coordinate")?,
        ]);
    }

    let t = lines.expect_tokens("`elements M`")?;
    if t.len() != 2 || t[0] != "elements" {
        return Err(lines.err("expected `elements M`"));
    }
    let m: usize = lines.number(t[1], "element count")?;
    let mut elements = Vec::with_capacity(m);
    for e in 0..m {
        let t = lines.expect_tokens("element connectivity")?;
        if t.len() != 4 {
            return Err(lines.err("expected four node indices"));
        }
        let mut conn = [0usize; 4];
        for (slot, tok) in conn.iter_mut().zip(&t) {
            *slot = lines.number(tok, "node index")?;
            if *slot >= n {
                return Err(lines.err(format!(
                    "element {e} references node {} but only {n} nodes exist",
                    *slot
                )));
            }
        }
        elements.push(conn);
    }

    let mut node_sets = BTreeMap::new();
    let mut seam = None;
    while let Some(t) = lines.next_tokens() {
        match t[0] {
            "set" if t.len() == 3 => {
                let name = t[1].to_string();
                let k: usize = lines.number(t[2], "set size")?;
                let mut members = Vec::with_capacity(k);
                while members.len() < k {
                    let row = lines.expect_tokens("set members")?;
                    for tok in row {
                        let i: usize = lines.number(tok, "node index")?;
                        if i >= n {
                            return Err(lines.err(format!("set `{name}` references node {i}")));
                        }
                        members.push(i);
                    }
                }
                if members.len() != k {
                    return Err(lines.err(format!("set `{name}` has more than {k} members")));
                }
                node_sets.insert(name, members);
            }
            "seam" if t.len() == 6 => {
                let mut c = [0.0; 4];
                for (slot, tok) in c.iter_mut().zip(&t[1..5]) {
                    *slot = lines.number(tok, "seam coordinate")?;
                }
                let k: usize = lines.number(t[5], "seam size")?;
                let mut pairs = Vec::with_capacity(k);
                for _ in 0..k {
                    let p = lines.expect_tokens("seam pair")?;
                    if p.len() != 2 {
                        return Err(lines.err("expected `original duplicate`"));
                    }
                    let a: usize = lines.number(p[0], "node index")?;
                    let b: usize = lines.number(p[1], "node index")?;
                    if a >= n || b >= n {
                        return Err(lines.err(format!("seam pair ({a}, {b}) out of range")));
                    }
                    pairs.push((a, b));
                }
                seam = Some(Seam {
                    start: [c[0], c[1]],
                    end: [c[2], c[3]],
                    pairs,
                });
            }
            other => return Err(lines.err(format!("unexpected `{other}`"))),
        }
    }

    let mesh = Mesh {
        nodes,
        elements,
        node_sets,
        seam,
    };
    mesh.validate()?;
    Ok(mesh)
}

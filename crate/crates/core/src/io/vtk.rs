//! Legacy ASCII VTK unstructured grids with nodal displacement and damage.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

const VTK_QUAD: u8 = 9;

pub fn write_vtk_to<W: Write>(
    mut w: W,
    mesh: &Mesh,
    u: &[f64],
    d: &[f64],
    title: &str,
) -> Result<()> {
    let n = mesh.num_nodes();
    if u.len() != 2 * n || d.len() != n {
        return Err(Error::Dimension(format!(
            "mesh has {n} nodes but u has {} and d has {} entries",
            u.len(),
            d.len()
        )));
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in &mesh.nodes {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let m = mesh.num_elements();
    writeln!(w, "CELLS {m} {}", 5 * m)?;
    for e in &mesh.elements {
        writeln!(w, "4 {} {} {} {}", e[0], e[1], e[2], e[3])?;
    }
    writeln!(w, "CELL_TYPES {m}")?;
    for _ in 0..m {
        writeln!(w, "{VTK_QUAD}")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS displacement double")?;
    for c in u.chunks_exact(2) {
        writeln!(w, "{} {} 0", c[0], c[1])?;
    }
    writeln!(w, "SCALARS damage double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in d {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Write `u` (2 per node) and `d` (1 per node) as a legacy VTK file.
pub fn write_vtk(mesh: &Mesh, u: &[f64], d: &[f64], path: &Path) -> Result<()> {
    let n = mesh.num_nodes();
    if u.len() != 2 * n || d.len() != n {
        return Err(Error::Dimension(format!(
            "mesh has {n} nodes but u has {} and d has {} entries",
            u.len(),
            d.len()
        )));
    }
    let file = std::fs::File::create(path)?;
    write_vtk_to(
        std::io::BufWriter::new(file),
        mesh,
        u,
        d,
        "phase-field snapshot",
    )
}

/// What the minimal reader recovers from a file written by `write_vtk`.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkGrid {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub displacement: Vec<[f64; 3]>,
    pub damage: Vec<f64>,
}

/// Reads the subset of the legacy format that `write_vtk` emits.
pub fn parse_vtk(text: &str, path: &Path) -> Result<VtkGrid> {
    let err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(err("missing `# vtk DataFile` header".into()));
    }
    lines.next();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err(err("only ASCII files are supported".into()));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| err(format!("unexpected end of file reading {what}")))
    };

    fn num<T: std::str::FromStr>(s: &str, what: &str, path: &Path) -> Result<T> {
        s.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("invalid {what} `{s}`"),
        })
    }

    let mut grid = VtkGrid {
        points: Vec::new(),
        cells: Vec::new(),
        cell_types: Vec::new(),
        displacement: Vec::new(),
        damage: Vec::new(),
    };
    let mut n_points = 0;
    while let Ok(tok) = next("keyword") {
        match tok {
            "DATASET" => {
                let kind = next("dataset type")?;
                if kind != "UNSTRUCTURED_GRID" {
                    return Err(err(format!("unsupported dataset `{kind}`")));
                }
            }
            "POINTS" => {
                n_points = num(next("point count")?, "point count", path)?;
                next("point type")?;
                for _ in 0..n_points {
                    let mut p = [0.0; 3];
                    for c in &mut p {
                        *c = num(next("coordinate")?, "coordinate", path)?;
                    }
                    grid.points.push(p);
                }
            }
            "CELLS" => {
                let m: usize = num(next("cell count")?, "cell count", path)?;
                next("cell list size")?;
                for _ in 0..m {
                    let k: usize = num(next("cell size")?, "cell size", path)?;
                    let cell = (0..k)
                        .map(|_| next("cell index").and_then(|s| num(s, "cell index", path)))
                        .collect::<Result<Vec<usize>>>()?;
                    grid.cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let m: usize = num(next("cell type count")?, "cell type count", path)?;
                for _ in 0..m {
                    grid.cell_types
                        .push(num(next("cell type")?, "cell type", path)?);
                }
            }
            "POINT_DATA" => {
                let _: usize = num(next("point data count")?, "point data count", path)?;
            }
            "VECTORS" => {
                let name = next("vector name")?.to_string();
                next("vector type")?;
                let mut values = Vec::with_capacity(n_points);
                for _ in 0..n_points {
                    let mut v = [0.0; 3];
                    for c in &mut v {
                        *c = num(next("vector component")?, "vector component", path)?;
                    }
                    values.push(v);
                }
                if name == "displacement" {
                    grid.displacement = values;
                }
            }
            "SCALARS" => {
                let name = next("scalar name")?.to_string();
                next("scalar type")?;
                let mut tok = next("scalar header")?;
                if tok != "LOOKUP_TABLE" {
                    // optional component count
                    tok = next("scalar header")?;
                }
                if tok != "LOOKUP_TABLE" {
                    return Err(err(format!("expected LOOKUP_TABLE, got `{tok}`")));
                }
                next("lookup table name")?;
                let values = (0..n_points)
                    .map(|_| next("scalar").and_then(|s| num(s, "scalar", path)))
                    .collect::<Result<Vec<f64>>>()?;
                if name == "damage" {
                    grid.damage = values;
                }
            }
            other => return Err(err(format!("unsupported keyword `{other}`"))),
        }
    }
    Ok(grid)
}

pub fn read_vtk(path: &Path) -> Result<VtkGrid> {
    parse_vtk(&std::fs::read_to_string(path)?, path)
}

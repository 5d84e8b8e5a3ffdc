//! Load-displacement curves as CSV.
//!
//! Floats use Rust's `Display` for f64, which is the shortest decimal that
//! parses back to the same value and never depends on the locale.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::StepRecord;

pub const CURVE_HEADER: &str = "step,displacement,reaction_force,max_damage";

/// One row of a load-displacement curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRecord {
    pub step: usize,
    /// Applied displacement in mm.
    pub displacement: f64,
    /// Reaction force in kN for unit thickness.
    pub reaction_force: f64,
    pub max_damage: f64,
}

impl From<&StepRecord> for CurveRecord {
    fn from(r: &StepRecord) -> Self {
        CurveRecord {
            step: r.step,
            displacement: r.displacement,
            reaction_force: r.reaction_force,
            max_damage: r.max_damage,
        }
    }
}

pub fn write_curve_to<W: Write>(mut w: W, rows: &[CurveRecord]) -> Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.step, r.displacement, r.reaction_force, r.max_damage
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve(path: &Path, rows: &[CurveRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_curve_to(std::io::BufWriter::new(file), rows)
}

pub fn parse_curve(text: &str, path: &Path) -> Result<Vec<CurveRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => return Err(err(1, format!("expected header `{CURVE_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err(i + 1, format!("expected 4 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| err(i + 1, format!("invalid number `{s}`")))
        };
        rows.push(CurveRecord {
            step: f[0]
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("invalid step `{}`", f[0])))?,
            displacement: num(f[1])?,
            reaction_force: num(f[2])?,
            max_damage: num(f[3])?,
        });
    }
    Ok(rows)
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRecord>> {
    parse_curve(&std::fs::read_to_string(path)?, path)
}

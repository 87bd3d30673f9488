//! File artifacts: PGM masks and CSV fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::balayage::BoundaryMeasure;
use crate::error::Result;
use crate::grid::{ComplexField, Point, RegionMask, ScalarField};

/// Binary PGM (P5, 8-bit), 255 for members. The first image row is the top
/// grid row.
pub fn write_pgm(region: &RegionMask, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&pgm_bytes(region))?;
    w.flush()?;
    Ok(())
}

pub fn pgm_bytes(region: &RegionMask) -> Vec<u8> {
    let g = region.grid();
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            out.push(if region.contains(g.index(i, j)) {
                255
            } else {
                0
            });
        }
    }
    out
}

/// Rows `x,y,value`, one per node.
pub fn write_scalar_csv(field: &ScalarField, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for k in 0..g.len() {
        let p = g.point(k);
        writeln!(w, "{},{},{:e}", p.x, p.y, field.get(k))?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `x,y,re,im` for the nodes of `defined`.
pub fn write_complex_csv(field: &ComplexField, defined: &RegionMask, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,re,im")?;
    for k in defined.members() {
        let p = g.point(k);
        let v = field.get(k);
        writeln!(w, "{},{},{:e},{:e}", p.x, p.y, v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `x,y,weight`, one per BOUNDARY node.
pub fn write_boundary_csv(nu: &BoundaryMeasure, path: &Path) -> Result<()> {
    let g = nu.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,weight")?;
    for &(k, v) in &nu.weights {
        let p = g.point(k);
        writeln!(w, "{},{},{:e}", p.x, p.y, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `x,y`.
pub fn write_points_csv(points: &[Point], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y")?;
    for p in points {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    w.flush()?;
    Ok(())
}

//! Legacy ASCII VTK writers: the matrix mesh as an unstructured grid of
//! quads with cell data, the fault layers as poly-lines.

use crate::error::Result;
use crate::fault::FaultModel;
use crate::geom::Vec2;
use crate::mesh::Mesh;
use crate::scalar::{to_f64, Scalar};
use std::io::Write;
use std::path::Path;

fn fmt(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Write the matrix mesh with per-cell scalar and vector data
/// (`VTK_QUAD` cells).
pub fn write_solution_vtk<T: Scalar>(
    path: &Path,
    mesh: &Mesh<T>,
    scalars: &[(&str, &[T])],
    vectors: &[(&str, &[Vec2<T>])],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "faultflow solution")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.points.len())?;
    for p in &mesh.points {
        writeln!(out, "{} {} 0.0", fmt(to_f64(p.x)), fmt(to_f64(p.y)))?;
    }
    let n = mesh.n_cells();
    writeln!(out, "CELLS {} {}", n, 5 * n)?;
    for c in 0..n {
        let (b, i, j) = mesh.locate_cell(c);
        let blk = &mesh.blocks[b];
        let pid = |i: usize, j: usize| blk.point_offset + j * (blk.nx + 1) + i;
        writeln!(
            out,
            "4 {} {} {} {}",
            pid(i, j),
            pid(i + 1, j),
            pid(i + 1, j + 1),
            pid(i, j + 1)
        )?;
    }
    writeln!(out, "CELL_TYPES {}", n)?;
    for _ in 0..n {
        writeln!(out, "9")?;
    }
    writeln!(out, "CELL_DATA {}", n)?;
    for (name, vals) in scalars {
        writeln!(out, "SCALARS {} double 1", name)?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in vals.iter() {
            writeln!(out, "{}", fmt(to_f64(*v)))?;
        }
    }
    for (name, vals) in vectors {
        writeln!(out, "VECTORS {} double", name)?;
        for v in vals.iter() {
            writeln!(out, "{} {} 0.0", fmt(to_f64(v.x)), fmt(to_f64(v.y)))?;
        }
    }
    Ok(())
}

/// Write the fault layer grids as poly-lines on their centre lines, with the
/// layer pressure and index as cell data.
pub fn write_fault_vtk<T: Scalar>(
    path: &Path,
    fault: &FaultModel<T>,
    pressures: [&[T]; 2],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "faultflow fault layers")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    let n_points: usize = fault.layers.iter().map(|l| l.cells.len() + 1).sum();
    let n_cells: usize = fault.layers.iter().map(|l| l.cells.len()).sum();
    writeln!(out, "POINTS {} double", n_points)?;
    for layer in &fault.layers {
        for y in layer.junctions() {
            writeln!(
                out,
                "{} {} 0.0",
                fmt(to_f64(layer.centerline_x)),
                fmt(to_f64(y))
            )?;
        }
    }
    writeln!(out, "CELLS {} {}", n_cells, 3 * n_cells)?;
    let mut offset = 0usize;
    for layer in &fault.layers {
        for k in 0..layer.cells.len() {
            writeln!(out, "2 {} {}", offset + k, offset + k + 1)?;
        }
        offset += layer.cells.len() + 1;
    }
    writeln!(out, "CELL_TYPES {}", n_cells)?;
    for _ in 0..n_cells {
        writeln!(out, "3")?;
    }
    writeln!(out, "CELL_DATA {}", n_cells)?;
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for layer in 0..2 {
        for v in pressures[layer] {
            writeln!(out, "{}", fmt(to_f64(*v)))?;
        }
    }
    writeln!(out, "SCALARS layer double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for layer in 0..2 {
        for _ in 0..fault.layers[layer].cells.len() {
            writeln!(out, "{}", (layer + 1) as f64)?;
        }
    }
    Ok(())
}

//! CSV tables and legacy-VTK field files.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;

/// Writes `header` and `rows` as comma-separated values.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Dimension(format!("CSV row has {} columns, header {}", r.len(), header.len())));
        }
        let cells: Vec<String> = r.iter().map(|x| format!("{x:.12e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Named per-cell or per-vertex scalar data for [`write_field_vtk`].
pub struct VtkField<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Legacy ASCII VTK polydata: primal vertices as points, primal cells as
/// polygons, `cell_data` (one value per cell) and `point_data` (one value
/// per primal vertex, i.e. per dual cell).
pub fn write_field_vtk(
    mesh: &PolyMesh,
    path: &Path,
    title: &str,
    cell_data: &[VtkField],
    point_data: &[VtkField],
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(mesh, &mut w, title, cell_data, point_data)?;
    w.flush()?;
    Ok(())
}

pub fn write_vtk(
    mesh: &PolyMesh,
    w: &mut impl Write,
    title: &str,
    cell_data: &[VtkField],
    point_data: &[VtkField],
) -> Result<()> {
    for f in cell_data {
        if f.values.len() != mesh.n_cells() {
            return Err(Error::Dimension(format!("cell field `{}` has {} values", f.name, f.values.len())));
        }
    }
    for f in point_data {
        if f.values.len() != mesh.n_verts() {
            return Err(Error::Dimension(format!("point field `{}` has {} values", f.name, f.values.len())));
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", mesh.n_verts())?;
    for v in mesh.verts() {
        writeln!(w, "{:.15e} {:.15e} {:.15e}", v.x, v.y, v.z)?;
    }
    let size: usize = (0..mesh.n_cells()).map(|c| mesh.cell(c).0.len() + 1).sum();
    writeln!(w, "POLYGONS {} {}", mesh.n_cells(), size)?;
    for c in 0..mesh.n_cells() {
        let verts = mesh.cell(c).0;
        let ids: Vec<String> = verts.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{} {}", verts.len(), ids.join(" "))?;
    }
    let scalars = |w: &mut dyn Write, f: &VtkField| -> std::io::Result<()> {
        writeln!(w, "SCALARS {} double 1", f.name)?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in f.values {
            writeln!(w, "{x:.15e}")?;
        }
        Ok(())
    };
    if !cell_data.is_empty() {
        writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
        for f in cell_data {
            scalars(w, f)?;
        }
    }
    if !point_data.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_verts())?;
        for f in point_data {
            scalars(w, f)?;
        }
    }
    Ok(())
}

//! CSV and legacy-VTK field writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! data gives byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::elements::FemField;
use crate::error::{FemError, Result};
use crate::mesh::Mesh;

/// Field data attached to mesh vertices.
#[derive(Debug, Clone, Copy)]
pub enum VtkData<'a> {
    Scalars(&'a str, &'a FemField),
    Vectors(&'a str, &'a FemField, &'a FemField),
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FemError::io(path, e))
}

/// `x[,y],value`, one row per dof in dof order.
pub fn field_csv(field: &FemField) -> String {
    let space = field.space();
    let two_d = space.mesh().dim() == 2;
    let mut s = String::from(if two_d { "x,y,value\n" } else { "x,value\n" });
    for (x, v) in space.dofmap().dof_coords().iter().zip(field.coefficients()) {
        let _ = if two_d {
            writeln!(s, "{},{},{}", x[0], x[1], v)
        } else {
            writeln!(s, "{},{}", x[0], v)
        };
    }
    s
}

pub fn write_field_csv(field: &FemField, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &field_csv(field))
}

/// Values at the mesh vertices; vertex dofs come first in every space.
fn vertex_values<'a>(mesh: &Mesh, field: &'a FemField) -> Result<&'a [f64]> {
    if *field.space().mesh().as_ref() != *mesh {
        return Err(FemError::invalid("field does not belong to the output mesh"));
    }
    Ok(&field.coefficients()[..mesh.n_vertices()])
}

pub fn vtk_string(mesh: &Mesh, fields: &[VtkData<'_>]) -> Result<String> {
    let nv = mesh.n_vertices();
    let mut s = String::from("# vtk DataFile Version 3.0\nfemkit output\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for x in mesh.vertex_coords() {
        let _ = writeln!(s, "{} {} 0", x[0], x[1]);
    }
    let (cells, per_cell, cell_type): (Vec<Vec<usize>>, usize, u8) = match mesh {
        Mesh::Interval(m) => ((0..m.n_elements()).map(|e| vec![e, e + 1]).collect(), 2, 3),
        Mesh::Triangle(m) => (m.triangles().iter().map(|t| t.to_vec()).collect(), 3, 5),
    };
    let _ = writeln!(s, "CELLS {} {}", cells.len(), cells.len() * (per_cell + 1));
    for c in &cells {
        let _ = write!(s, "{per_cell}");
        for v in c {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        let _ = writeln!(s, "{cell_type}");
    }
    if fields.is_empty() {
        return Ok(s);
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for data in fields {
        match *data {
            VtkData::Scalars(name, f) => {
                let values = vertex_values(mesh, f)?;
                let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", vtk_name(name));
                for v in values {
                    let _ = writeln!(s, "{v}");
                }
            }
            VtkData::Vectors(name, u, w) => {
                let (a, b) = (vertex_values(mesh, u)?, vertex_values(mesh, w)?);
                let _ = writeln!(s, "VECTORS {} double", vtk_name(name));
                for (p, q) in a.iter().zip(b) {
                    let _ = writeln!(s, "{p} {q} 0");
                }
            }
        }
    }
    Ok(s)
}

fn vtk_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

pub fn write_vtk(mesh: &Mesh, fields: &[VtkData<'_>], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &vtk_string(mesh, fields)?)
}

//! Plain-text mesh format.
//!
//! ```text
//! femkit-mesh 1
//! <nv> <nt> <nb>
//! x y            (nv lines)
//! i j k          (nt lines, 0-based, counter-clockwise)
//! i j label      (nb lines)
//! ```
//! Tokens are whitespace separated; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use super::validate::{validate_conformity, Violation};
use super::{BoundaryEdge, TriMesh};
use crate::error::{FemError, Result};

const MAGIC: &str = "femkit-mesh";

/// Serialize with 17 significant digits so that reading back is exact.
pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} 1");
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges().len()
    );
    for [x, y] in mesh.vertices() {
        let _ = writeln!(out, "{x:.16e} {y:.16e}");
    }
    for [i, j, k] in mesh.triangles() {
        let _ = writeln!(out, "{i} {j} {k}");
    }
    for e in mesh.boundary_edges() {
        let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.label);
    }
    out
}

pub fn write_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| FemError::io(path, e))
}

/// Line numbers of each record, for error reporting after parsing.
#[derive(Debug, Default)]
struct Lines {
    header: usize,
    vertices: Vec<usize>,
    triangles: Vec<usize>,
    boundary: Vec<usize>,
}

fn parse_with_lines(text: &str) -> Result<(TriMesh, Lines)> {
    let mut records = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: String| FemError::MeshParse { line, message };
    let last_line = text.lines().count().max(1);

    let (line, magic) = records.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut tok = magic.split_whitespace();
    if tok.next() != Some(MAGIC) || tok.next() != Some("1") || tok.next().is_some() {
        return Err(err(line, format!("expected header `{MAGIC} 1`")));
    }

    let (header, counts) = records
        .next()
        .ok_or_else(|| err(last_line, "missing counts line".into()))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(header, "counts must be non-negative integers".into()))?;
    let [nv, nt, nb] = counts[..] else {
        return Err(err(header, "expected `<nv> <nt> <nb>`".into()));
    };
    if nt == 0 {
        return Err(err(header, "no elements".into()));
    }

    let mut lines = Lines {
        header,
        ..Default::default()
    };
    let mut next_fields = |what: &str, n: usize| -> Result<(usize, Vec<&str>)> {
        let (line, rec) = records
            .next()
            .ok_or_else(|| err(last_line, format!("unexpected end of file in {what} section")))?;
        let fields: Vec<&str> = rec.split_whitespace().collect();
        if fields.len() != n {
            return Err(err(line, format!("expected {n} fields in {what} record")));
        }
        Ok((line, fields))
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, f) = next_fields("vertex", 2)?;
        let p: Vec<f64> = f
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(line, "malformed coordinate".into()))?;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(err(line, "non-finite coordinate".into()));
        }
        vertices.push([p[0], p[1]]);
        lines.vertices.push(line);
    }
    let index = |line: usize, s: &str| -> Result<usize> {
        let i: usize = s
            .parse()
            .map_err(|_| err(line, format!("malformed index `{s}`")))?;
        if i >= nv {
            return Err(err(line, format!("vertex index {i} out of range (nv = {nv})")));
        }
        Ok(i)
    };
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, f) = next_fields("triangle", 3)?;
        triangles.push([index(line, f[0])?, index(line, f[1])?, index(line, f[2])?]);
        lines.triangles.push(line);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, f) = next_fields("boundary", 3)?;
        let label: u32 = f[2]
            .parse()
            .map_err(|_| err(line, format!("malformed label `{}`", f[2])))?;
        boundary.push(BoundaryEdge {
            vertices: [index(line, f[0])?, index(line, f[1])?],
            label,
        });
        lines.boundary.push(line);
    }
    if let Some((line, _)) = records.next() {
        return Err(err(line, "trailing data after boundary section".into()));
    }
    Ok((TriMesh::from_parts(vertices, triangles, boundary)?, lines))
}

/// Parse the text format, checking structure and index bounds only.
pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    parse_with_lines(text).map(|(m, _)| m)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FemError::io(path, e))
}

/// Read without checking conformity (for the validator).
pub fn read_mesh_unchecked(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_mesh(&read_text(path.as_ref())?)
}

/// Read a mesh and reject it unless it is a conforming triangulation.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let (mesh, lines) = parse_with_lines(&read_text(path.as_ref())?)?;
    let report = validate_conformity(&mesh);
    if let Some(v) = report.violations.first() {
        let line = match v {
            Violation::NonPositiveArea { triangle, .. } => lines.triangles[*triangle],
            Violation::HangingVertex { vertex, .. } => lines.vertices[*vertex],
            Violation::NonManifoldEdge { triangles, .. } => lines.triangles[triangles[0]],
            Violation::InvalidBoundaryEdge { edge, .. } => mesh
                .boundary_edges()
                .iter()
                .position(|e| {
                    let mut v = e.vertices;
                    v.sort_unstable();
                    v == *edge
                })
                .map_or(lines.header, |i| lines.boundary[i]),
            Violation::UnlabeledBoundaryEdge { .. } | Violation::AreaMismatch { .. } => lines.header,
        };
        return Err(FemError::MeshParse {
            line,
            message: format!("non-conforming mesh: {v}"),
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DomainSpec};

    #[test]
    fn round_trip_is_exact() {
        let spec = DomainSpec::Disk {
            radius: 1.0,
            n_r: 3,
            n_theta: 13,
        };
        let m = build_structured_mesh(&spec).unwrap();
        let back = parse_mesh(&mesh_to_string(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn index_out_of_range_names_line() {
        let text = "femkit-mesh 1\n3 1 0\n0 0\n1 0\n0 1\n0 1 3\n";
        match parse_mesh(text) {
            Err(FemError::MeshParse { line: 6, message }) => assert!(message.contains("out of range")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_triangle_section() {
        let text = "femkit-mesh 1\n# comment line\n3 0 0\n0 0\n1 0\n0 1\n";
        match parse_mesh(text) {
            Err(FemError::MeshParse { line: 3, message }) => assert_eq!(message, "no elements"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            parse_mesh("gmsh 2\n"),
            Err(FemError::MeshParse { line: 1, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "femkit-mesh 1 # v1\n\n3 1 3\n0 0\n1 0 # vertex\n0 1\n0 1 2\n0 1 1\n1 2 1\n2 0 1\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.n_triangles(), 1);
    }
}

//! Conformity checks and shape-regularity metrics for triangulations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::TriMesh;
use crate::error::{FemError, Result};

/// One broken mesh invariant, with the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Triangle with zero or negative (clockwise) signed area.
    NonPositiveArea { triangle: usize, area: f64 },
    /// Vertex lying in the interior of another triangle's edge.
    HangingVertex { vertex: usize, edge: [usize; 2] },
    /// Edge shared by more than two triangles, or twice with the same orientation.
    NonManifoldEdge { edge: [usize; 2], triangles: Vec<usize> },
    /// Edge owned by a single triangle but missing from the boundary list.
    UnlabeledBoundaryEdge { edge: [usize; 2] },
    /// Listed boundary edge not owned by exactly one triangle.
    InvalidBoundaryEdge { edge: [usize; 2], owners: usize },
    /// Triangles overlap or leave holes inside the boundary loop.
    AreaMismatch { triangles: f64, enclosed: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveArea { triangle, area } => {
                write!(f, "triangle {triangle} has non-positive signed area {area:e}")
            }
            Violation::HangingVertex { vertex, edge } => write!(
                f,
                "vertex {vertex} hangs in the interior of edge ({}, {})",
                edge[0], edge[1]
            ),
            Violation::NonManifoldEdge { edge, triangles } => write!(
                f,
                "edge ({}, {}) is shared inconsistently by triangles {:?}",
                edge[0], edge[1], triangles
            ),
            Violation::UnlabeledBoundaryEdge { edge } => {
                write!(f, "boundary edge ({}, {}) carries no label", edge[0], edge[1])
            }
            Violation::InvalidBoundaryEdge { edge, owners } => write!(
                f,
                "labeled edge ({}, {}) belongs to {owners} triangles, expected 1",
                edge[0], edge[1]
            ),
            Violation::AreaMismatch { triangles, enclosed } => write!(
                f,
                "triangle areas sum to {triangles} but the boundary encloses {enclosed}"
            ),
        }
    }
}

/// Outcome of [`validate_conformity`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConformityReport {
    pub violations: Vec<Violation>,
}

impl ConformityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Pass/fail per checked invariant.
    pub fn invariants(&self) -> Vec<(&'static str, bool)> {
        let has = |pred: fn(&Violation) -> bool| !self.violations.iter().any(pred);
        vec![
            (
                "positive area",
                has(|v| matches!(v, Violation::NonPositiveArea { .. })),
            ),
            (
                "no hanging vertices",
                has(|v| matches!(v, Violation::HangingVertex { .. })),
            ),
            (
                "edge sharing",
                has(|v| {
                    matches!(
                        v,
                        Violation::NonManifoldEdge { .. }
                            | Violation::UnlabeledBoundaryEdge { .. }
                            | Violation::InvalidBoundaryEdge { .. }
                    )
                }),
            ),
            ("coverage", has(|v| matches!(v, Violation::AreaMismatch { .. }))),
        ]
    }
}

impl fmt::Display for ConformityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ok) in self.invariants() {
            writeln!(f, "{:<20} {}", name, if ok { "PASS" } else { "FAIL" })?;
        }
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Check every triangulation invariant and report all violations found.
pub fn validate_conformity(mesh: &TriMesh) -> ConformityReport {
    let mut violations = Vec::new();
    let verts = mesh.vertices();

    let mut area_sum = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.signed_area(t);
        area_sum += area;
        if !(area > 0.0) {
            violations.push(Violation::NonPositiveArea { triangle: t, area });
        }
    }

    // directed half-edges per undirected edge
    let mut owners: BTreeMap<[usize; 2], Vec<(usize, bool)>> = BTreeMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owners.entry(sorted(a, b)).or_default().push((t, a < b));
        }
    }
    let labeled: HashMap<[usize; 2], usize> = {
        let mut m = HashMap::new();
        for e in mesh.boundary_edges() {
            *m.entry(sorted(e.vertices[0], e.vertices[1])).or_insert(0) += 1;
        }
        m
    };
    for (edge, own) in &owners {
        let bad = own.len() > 2 || (own.len() == 2 && own[0].1 == own[1].1);
        if bad {
            violations.push(Violation::NonManifoldEdge {
                edge: *edge,
                triangles: own.iter().map(|o| o.0).collect(),
            });
        } else if own.len() == 1 && !labeled.contains_key(edge) {
            violations.push(Violation::UnlabeledBoundaryEdge { edge: *edge });
        }
    }
    for (edge, &count) in &labeled {
        let n = owners.get(edge).map_or(0, Vec::len);
        if n != 1 || count != 1 {
            violations.push(Violation::InvalidBoundaryEdge {
                edge: *edge,
                owners: n,
            });
        }
    }

    // hanging vertices: search candidates in x-sorted order
    let mut by_x: Vec<usize> = (0..verts.len()).collect();
    by_x.sort_by(|&a, &b| verts[a][0].total_cmp(&verts[b][0]));
    let xs: Vec<f64> = by_x.iter().map(|&v| verts[v][0]).collect();
    for edge in owners.keys() {
        let (p, q) = (verts[edge[0]], verts[edge[1]]);
        let d = [q[0] - p[0], q[1] - p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let tol = 1e-10 * len2.sqrt();
        let lo = xs.partition_point(|&x| x < p[0].min(q[0]) - tol);
        let hi = xs.partition_point(|&x| x <= p[0].max(q[0]) + tol);
        for &v in &by_x[lo..hi] {
            if v == edge[0] || v == edge[1] {
                continue;
            }
            let r = [verts[v][0] - p[0], verts[v][1] - p[1]];
            let cross = d[0] * r[1] - d[1] * r[0];
            let s = (d[0] * r[0] + d[1] * r[1]) / len2;
            if cross.abs() <= tol * len2.sqrt() && s > 1e-10 && s < 1.0 - 1e-10 {
                violations.push(Violation::HangingVertex {
                    vertex: v,
                    edge: *edge,
                });
            }
        }
    }

    // area enclosed by the boundary, oriented by the owning triangles
    let mut enclosed = 0.0;
    for (edge, own) in &owners {
        if own.len() == 1 {
            let (a, b) = if own[0].1 {
                (edge[0], edge[1])
            } else {
                (edge[1], edge[0])
            };
            enclosed += 0.5 * (verts[a][0] * verts[b][1] - verts[b][0] * verts[a][1]);
        }
    }
    if (area_sum - enclosed).abs() > 1e-9 * area_sum.abs().max(enclosed.abs()).max(1e-300) {
        violations.push(Violation::AreaMismatch {
            triangles: area_sum,
            enclosed,
        });
    }

    ConformityReport { violations }
}

/// Shape-regularity summary of a triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    /// Largest element diameter.
    pub h: f64,
    /// Largest diameter-to-inradius ratio.
    pub max_aspect: f64,
    /// `h` divided by the smallest element diameter.
    pub quasi_uniformity: f64,
}

/// Diameter, inradius and aspect ratio of one triangle.
pub(crate) fn triangle_shape(p: &[[f64; 2]; 3]) -> Option<(f64, f64)> {
    let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let edges = [len(p[0], p[1]), len(p[1], p[2]), len(p[2], p[0])];
    let area = super::signed_area(p).abs();
    let perimeter: f64 = edges.iter().sum();
    if area <= 1e-14 * perimeter * perimeter {
        return None;
    }
    let diam = edges.iter().copied().fold(0.0, f64::max);
    Some((diam, 2.0 * area / perimeter))
}

pub fn mesh_metrics(mesh: &TriMesh) -> Result<MeshMetrics> {
    if mesh.n_triangles() == 0 {
        return Err(FemError::invalid("mesh has no elements"));
    }
    let mut h: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let (diam, inradius) =
            triangle_shape(&mesh.triangle_coords(t)).ok_or(FemError::DegenerateElement {
                element: t,
                det: 2.0 * mesh.signed_area(t),
            })?;
        h = h.max(diam);
        h_min = h_min.min(diam);
        max_aspect = max_aspect.max(diam / inradius);
    }
    Ok(MeshMetrics {
        h,
        max_aspect,
        quasi_uniformity: h / h_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoundaryEdge, DomainSpec};

    fn single(p: [[f64; 2]; 3]) -> TriMesh {
        TriMesh::from_parts(
            p.to_vec(),
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge {
                    vertices: [0, 1],
                    label: 1,
                },
                BoundaryEdge {
                    vertices: [1, 2],
                    label: 1,
                },
                BoundaryEdge {
                    vertices: [2, 0],
                    label: 1,
                },
            ],
        )
        .unwrap()
    }

    /// Lower-left triangle of a square whose hypotenuse is split on the
    /// other side by vertex 4.
    pub(crate) fn hanging_node_mesh() -> TriMesh {
        let vertices = vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0], [1.0, 1.0]];
        let triangles = vec![[0, 1, 2], [1, 3, 4], [4, 3, 2]];
        let b = |a, c, label| BoundaryEdge {
            vertices: [a, c],
            label,
        };
        let boundary = vec![b(0, 1, 1), b(1, 3, 2), b(3, 2, 3), b(2, 0, 4)];
        TriMesh::from_parts(vertices, triangles, boundary).unwrap()
    }

    #[test]
    fn generated_meshes_pass() {
        let spec = DomainSpec::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
            nx: 4,
            ny: 3,
        };
        let report = validate_conformity(&build_structured_mesh(&spec).unwrap());
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn hanging_node_is_named() {
        let report = validate_conformity(&hanging_node_mesh());
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::HangingVertex {
                vertex: 4,
                edge: [1, 2]
            }
        )));
    }

    #[test]
    fn clockwise_triangle_fails_area_check() {
        let report = validate_conformity(&single([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveArea { triangle: 0, .. })));
        assert!(!report.invariants()[0].1);
    }

    #[test]
    fn overlapping_triangles_fail_coverage() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2]];
        let triangles = vec![[0, 1, 2], [0, 1, 3]];
        let m = TriMesh::from_parts(vertices, triangles, vec![]).unwrap();
        assert!(!validate_conformity(&m).passed());
    }

    #[test]
    fn metrics_of_reference_shapes() {
        let right = single([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let m = mesh_metrics(&right).unwrap();
        let inradius = (2.0 - 2f64.sqrt()) / 2.0;
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.max_aspect - 2f64.sqrt() / inradius).abs() < 1e-12);
        assert!((m.max_aspect - 4.828427124746).abs() < 1e-9);

        let eq = single([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        let m = mesh_metrics(&eq).unwrap();
        assert!((m.max_aspect - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.quasi_uniformity, 1.0);
    }

    #[test]
    fn uniform_rectangle_quasi_uniformity() {
        let spec = DomainSpec::Rectangle {
            x0: 0.0,
            x1: 3.0,
            y0: 0.0,
            y1: 1.0,
            nx: 6,
            ny: 6,
        };
        let m = mesh_metrics(&build_structured_mesh(&spec).unwrap()).unwrap();
        // every cell is 0.5 x 1/6; all triangles have the same diagonal
        assert!((m.quasi_uniformity - 1.0).abs() < 1e-12);
        let edge_ratio = 0.5 / (1.0 / 6.0);
        assert!(m.quasi_uniformity <= 2f64.sqrt() * edge_ratio);
        assert!(m.max_aspect >= 2.0);
    }

    #[test]
    fn degenerate_triangle_is_an_error() {
        let flat = single([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(matches!(
            mesh_metrics(&flat),
            Err(FemError::DegenerateElement { element: 0, .. })
        ));
    }
}

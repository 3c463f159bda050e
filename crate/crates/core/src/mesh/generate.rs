//! Deterministic structured and mapped mesh generators.

use std::f64::consts::PI;

use super::{BoundaryEdge, DomainSpec, Mesh1D, TriMesh};
use crate::error::{FemError, Result};

/// Uniform partition of [a, b] into `n` elements.
pub fn build_interval_mesh(a: f64, b: f64, n: usize) -> Result<Mesh1D> {
    if !(a < b) {
        return Err(FemError::invalid(format!("interval needs a < b, got [{a}, {b}]")));
    }
    if n == 0 {
        return Err(FemError::invalid("interval needs at least one element"));
    }
    let h = b - a;
    let vertices = (0..=n)
        .map(|i| if i == n { b } else { a + h * i as f64 / n as f64 })
        .collect();
    Mesh1D::new(vertices)
}

/// Triangulate one of the 2D domain kinds.
///
/// Quad cells are split along the lower-left to upper-right diagonal.
/// Rectangle labels are 1 bottom, 2 right, 3 top, 4 left; the dike uses 1
/// for the curved walls, 2 for the inflow side and 3 for the outflow side;
/// the disk boundary is label 1.
pub fn build_structured_mesh(spec: &DomainSpec) -> Result<TriMesh> {
    spec.validate()?;
    match *spec {
        DomainSpec::Interval { .. } => Err(FemError::invalid(
            "an interval is not a 2D domain; use build_interval_mesh",
        )),
        DomainSpec::Rectangle {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
        } => {
            let lerp = |lo: f64, hi: f64, i: usize, n: usize| {
                if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                }
            };
            Ok(mapped_grid(nx, ny, [1, 2, 3, 4], |i, j| {
                [lerp(x0, x1, i, nx), lerp(y0, y1, j, ny)]
            }))
        }
        DomainSpec::Dike { nx, ny } => Ok(mapped_grid(nx, ny, [1, 3, 1, 2], |i, j| {
            let s = -2.0 * PI + 4.0 * PI * i as f64 / nx as f64;
            let t = j as f64 / ny as f64;
            [s, s.sin() - 1.0 + 2.0 * t]
        })),
        DomainSpec::Disk { radius, n_r, n_theta } => Ok(disk(radius, n_r, n_theta)),
    }
}

/// Grid of (nx+1) x (ny+1) points produced by `point(i, j)`, two triangles
/// per cell. `labels` are for the bottom, right, top and left sides.
fn mapped_grid(nx: usize, ny: usize, labels: [u32; 4], point: impl Fn(usize, usize) -> [f64; 2]) -> TriMesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(point(i, j));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let [bottom, right, top, left] = labels;
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(BoundaryEdge {
            vertices: [idx(i, 0), idx(i + 1, 0)],
            label: bottom,
        });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge {
            vertices: [idx(nx, j), idx(nx, j + 1)],
            label: right,
        });
    }
    for i in (0..nx).rev() {
        boundary.push(BoundaryEdge {
            vertices: [idx(i + 1, ny), idx(i, ny)],
            label: top,
        });
    }
    for j in (0..ny).rev() {
        boundary.push(BoundaryEdge {
            vertices: [idx(0, j + 1), idx(0, j)],
            label: left,
        });
    }
    TriMesh {
        vertices,
        triangles,
        boundary_edges: boundary,
    }
}

/// Polar grid: a centre vertex, `n_r` rings of `n_theta` vertices each, a
/// triangle fan around the centre and split quads elsewhere.
fn disk(radius: f64, n_r: usize, n_theta: usize) -> TriMesh {
    let ring = |k: usize, j: usize| 1 + (k - 1) * n_theta + j % n_theta;
    let mut vertices = Vec::with_capacity(1 + n_r * n_theta);
    vertices.push([0.0, 0.0]);
    for k in 1..=n_r {
        let r = if k == n_r {
            radius
        } else {
            radius * k as f64 / n_r as f64
        };
        for j in 0..n_theta {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(n_theta * (2 * n_r - 1));
    for j in 0..n_theta {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..n_r {
        for j in 0..n_theta {
            let (a, b, c, d) = (ring(k, j), ring(k + 1, j), ring(k + 1, j + 1), ring(k, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let boundary = (0..n_theta)
        .map(|j| BoundaryEdge {
            vertices: [ring(n_r, j), ring(n_r, j + 1)],
            label: 1,
        })
        .collect();
    TriMesh {
        vertices,
        triangles,
        boundary_edges: boundary,
    }
}

//! 1D partitions and 2D conforming triangulations.
//!
//! Meshes are plain immutable data once built. Generators for the
//! structured/mapped domains live in [`generate`], conformity checks and
//! shape metrics in [`validate`], and the text file format in [`io`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{FemError, Result};

pub mod generate;
pub mod io;
pub mod validate;

pub use generate::{build_interval_mesh, build_structured_mesh};
pub use io::{parse_mesh, read_mesh, write_mesh};
pub use validate::{mesh_metrics, validate_conformity, ConformityReport, MeshMetrics};

/// Label of the left endpoint of an interval mesh.
pub const LEFT: u32 = 1;
/// Label of the right endpoint of an interval mesh.
pub const RIGHT: u32 = 2;

/// Partition a = x_0 < x_1 < ... < x_{M-1} = b of an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    vertices: Vec<f64>,
    boundary_labels: [u32; 2],
}

impl Mesh1D {
    /// Build from an arbitrary strictly increasing vertex list.
    pub fn new(vertices: Vec<f64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(FemError::invalid("a 1D mesh needs at least two vertices"));
        }
        if let Some(i) = vertices.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(FemError::invalid(format!(
                "vertices must be strictly increasing (x[{}] >= x[{}])",
                i,
                i + 1
            )));
        }
        Ok(Self {
            vertices,
            boundary_labels: [LEFT, RIGHT],
        })
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Endpoints of element `i`, the interval (x_i, x_{i+1}).
    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.vertices[i], self.vertices[i + 1])
    }

    /// Labels of the left and right endpoint.
    pub fn boundary_labels(&self) -> [u32; 2] {
        self.boundary_labels
    }

    /// Largest element length.
    pub fn h(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// A labeled boundary edge of a triangulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub label: u32,
}

/// Conforming triangulation with counter-clockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl TriMesh {
    /// Assemble a mesh from raw parts. Only index bounds are checked here;
    /// run [`validate_conformity`] for the geometric invariants.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for &idx in triangles
            .iter()
            .flatten()
            .chain(boundary_edges.iter().flat_map(|e| e.vertices.iter()))
        {
            if idx >= nv {
                return Err(FemError::IndexOutOfRange {
                    index: idx,
                    bound: nv,
                });
            }
        }
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t` (positive when counter-clockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_coords(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Distinct boundary labels present in the mesh.
    pub fn labels(&self) -> BTreeSet<u32> {
        self.boundary_edges.iter().map(|e| e.label).collect()
    }

    /// Triangle owning each boundary edge, in boundary-edge order.
    pub fn boundary_owners(&self) -> Result<Vec<usize>> {
        let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
        let mut owner = std::collections::HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                owner.insert(key(tri[k], tri[(k + 1) % 3]), t);
            }
        }
        self.boundary_edges
            .iter()
            .map(|e| {
                owner
                    .get(&key(e.vertices[0], e.vertices[1]))
                    .copied()
                    .ok_or_else(|| {
                        FemError::invalid(format!("boundary edge {:?} belongs to no triangle", e.vertices))
                    })
            })
            .collect()
    }
}

pub(crate) fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Either kind of mesh the solvers accept.
#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Interval(Mesh1D),
    Triangle(TriMesh),
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        match self {
            Mesh::Interval(m) => m.n_elements(),
            Mesh::Triangle(m) => m.n_triangles(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        match self {
            Mesh::Interval(m) => m.n_vertices(),
            Mesh::Triangle(m) => m.n_vertices(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Mesh::Interval(_) => 1,
            Mesh::Triangle(_) => 2,
        }
    }

    pub fn labels(&self) -> BTreeSet<u32> {
        match self {
            Mesh::Interval(m) => m.boundary_labels().into_iter().collect(),
            Mesh::Triangle(m) => m.labels(),
        }
    }

    /// Vertex coordinates, 1D meshes padded with y = 0.
    pub fn vertex_coords(&self) -> Vec<[f64; 2]> {
        match self {
            Mesh::Interval(m) => m.vertices().iter().map(|&x| [x, 0.0]).collect(),
            Mesh::Triangle(m) => m.vertices().to_vec(),
        }
    }

    /// Largest element diameter.
    pub fn h(&self) -> Result<f64> {
        match self {
            Mesh::Interval(m) => Ok(m.h()),
            Mesh::Triangle(m) => Ok(mesh_metrics(m)?.h),
        }
    }

    /// Measure of the meshed domain (length or area).
    pub fn measure(&self) -> f64 {
        match self {
            Mesh::Interval(m) => m.vertices()[m.n_vertices() - 1] - m.vertices()[0],
            Mesh::Triangle(m) => m.total_area(),
        }
    }

    pub fn as_tri(&self) -> Option<&TriMesh> {
        match self {
            Mesh::Triangle(m) => Some(m),
            Mesh::Interval(_) => None,
        }
    }

    pub fn as_interval(&self) -> Option<&Mesh1D> {
        match self {
            Mesh::Interval(m) => Some(m),
            Mesh::Triangle(_) => None,
        }
    }
}

impl From<Mesh1D> for Mesh {
    fn from(m: Mesh1D) -> Self {
        Mesh::Interval(m)
    }
}

impl From<TriMesh> for Mesh {
    fn from(m: TriMesh) -> Self {
        Mesh::Triangle(m)
    }
}

/// Parameters of the built-in domain generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
        n: usize,
    },
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
    },
    Disk {
        radius: f64,
        n_r: usize,
        n_theta: usize,
    },
    /// The channel [-2pi, 2pi] x [0, 1] mapped by (s, t) -> (s, sin s - 1 + 2t).
    Dike {
        nx: usize,
        ny: usize,
    },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { a, b, n } => a < b && n >= 1,
            DomainSpec::Rectangle {
                x0,
                x1,
                y0,
                y1,
                nx,
                ny,
            } => x0 < x1 && y0 < y1 && nx >= 1 && ny >= 1,
            DomainSpec::Disk { radius, n_r, n_theta } => radius > 0.0 && n_r >= 1 && n_theta >= 3,
            DomainSpec::Dike { nx, ny } => nx >= 1 && ny >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(FemError::invalid(format!("invalid domain {self}")))
        }
    }

    /// Same domain with every element count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        match *self {
            DomainSpec::Interval { a, b, n } => DomainSpec::Interval { a, b, n: n * factor },
            DomainSpec::Rectangle {
                x0,
                x1,
                y0,
                y1,
                nx,
                ny,
            } => DomainSpec::Rectangle {
                x0,
                x1,
                y0,
                y1,
                nx: nx * factor,
                ny: ny * factor,
            },
            DomainSpec::Disk { radius, n_r, n_theta } => DomainSpec::Disk {
                radius,
                n_r: n_r * factor,
                n_theta: n_theta * factor,
            },
            DomainSpec::Dike { nx, ny } => DomainSpec::Dike {
                nx: nx * factor,
                ny: ny * factor,
            },
        }
    }

    /// Generate the mesh (1D or 2D depending on the kind).
    pub fn build(&self) -> Result<Mesh> {
        match *self {
            DomainSpec::Interval { a, b, n } => Ok(Mesh::Interval(build_interval_mesh(a, b, n)?)),
            _ => Ok(Mesh::Triangle(build_structured_mesh(self)?)),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DomainSpec::Interval { a, b, n } => write!(f, "interval({a:?},{b:?},{n})"),
            DomainSpec::Rectangle {
                x0,
                x1,
                y0,
                y1,
                nx,
                ny,
            } => write!(f, "rectangle({x0:?},{x1:?},{y0:?},{y1:?},{nx},{ny})"),
            DomainSpec::Disk { radius, n_r, n_theta } => write!(f, "disk({radius:?},{n_r},{n_theta})"),
            DomainSpec::Dike { nx, ny } => write!(f, "dike({nx},{ny})"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = FemError;

    /// Parses `interval(a,b,n)`, `rectangle(x0,x1,y0,y1,nx,ny)`,
    /// `disk(radius,n_r,n_theta)` or `dike(nx,ny)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || FemError::invalid(format!("malformed domain `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let kind = s[..open].trim();
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let real = |i: usize| -> Result<f64> { args[i].parse::<f64>().map_err(|_| bad()) };
        let count = |i: usize| -> Result<usize> { args[i].parse::<usize>().map_err(|_| bad()) };
        let want = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        let spec = match kind {
            "interval" => {
                want(3)?;
                DomainSpec::Interval {
                    a: real(0)?,
                    b: real(1)?,
                    n: count(2)?,
                }
            }
            "rectangle" => {
                want(6)?;
                DomainSpec::Rectangle {
                    x0: real(0)?,
                    x1: real(1)?,
                    y0: real(2)?,
                    y1: real(3)?,
                    nx: count(4)?,
                    ny: count(5)?,
                }
            }
            "disk" => {
                want(3)?;
                DomainSpec::Disk {
                    radius: real(0)?,
                    n_r: count(1)?,
                    n_theta: count(2)?,
                }
            }
            "dike" => {
                want(2)?;
                DomainSpec::Dike {
                    nx: count(0)?,
                    ny: count(1)?,
                }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

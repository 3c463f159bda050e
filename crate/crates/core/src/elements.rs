//! Lagrange bases, element maps, degree-of-freedom maps and FE fields.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{FemError, Result};
use crate::mesh::Mesh;

/// Which Lagrange space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeKind {
    /// Piecewise-linear on an interval mesh, reference element [0, 1].
    P1Line,
    /// Piecewise-linear on triangles.
    P1Tri,
    /// Piecewise-quadratic on triangles, local order (v0, v1, v2, e01, e12, e02).
    P2Tri,
}

/// Space tag: the kind plus whether boundary dofs are eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeSpaceTag {
    pub kind: FeKind,
    pub constrained: bool,
}

impl FeKind {
    pub fn n_local(self) -> usize {
        match self {
            FeKind::P1Line => 2,
            FeKind::P1Tri => 3,
            FeKind::P2Tri => 6,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeKind::P1Line => 1,
            FeKind::P1Tri | FeKind::P2Tri => 2,
        }
    }

    pub fn degree(self) -> u32 {
        match self {
            FeKind::P1Line | FeKind::P1Tri => 1,
            FeKind::P2Tri => 2,
        }
    }

    /// Reference coordinates of the local nodes.
    pub fn nodes(self) -> &'static [[f64; 2]] {
        match self {
            FeKind::P1Line => &[[0.0, 0.0], [1.0, 0.0]],
            FeKind::P1Tri => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            FeKind::P2Tri => &[
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.5, 0.0],
                [0.5, 0.5],
                [0.0, 0.5],
            ],
        }
    }

    /// Value and reference gradient of local basis function `local` at `p`.
    pub fn eval(self, local: usize, p: [f64; 2]) -> Result<(f64, [f64; 2])> {
        if local >= self.n_local() {
            return Err(FemError::IndexOutOfRange {
                index: local,
                bound: self.n_local(),
            });
        }
        Ok(self.eval_unchecked(local, p))
    }

    #[inline]
    pub(crate) fn eval_unchecked(self, local: usize, [s, t]: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            FeKind::P1Line => match local {
                0 => (1.0 - s, [-1.0, 0.0]),
                _ => (s, [1.0, 0.0]),
            },
            FeKind::P1Tri => match local {
                0 => (1.0 - s - t, [-1.0, -1.0]),
                1 => (s, [1.0, 0.0]),
                _ => (t, [0.0, 1.0]),
            },
            FeKind::P2Tri => {
                let lam = [1.0 - s - t, s, t];
                const GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
                match local {
                    0..=2 => {
                        let l = lam[local];
                        let g = GRAD[local];
                        let c = 4.0 * l - 1.0;
                        (l * (2.0 * l - 1.0), [c * g[0], c * g[1]])
                    }
                    _ => {
                        let (i, j) = match local {
                            3 => (0, 1),
                            4 => (1, 2),
                            _ => (0, 2),
                        };
                        let (gi, gj) = (GRAD[i], GRAD[j]);
                        (
                            4.0 * lam[i] * lam[j],
                            [
                                4.0 * (lam[j] * gi[0] + lam[i] * gj[0]),
                                4.0 * (lam[j] * gi[1] + lam[i] * gj[1]),
                            ],
                        )
                    }
                }
            }
        }
    }

    /// All local values and reference gradients at `p`.
    pub(crate) fn eval_all(self, p: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        for k in 0..self.n_local() {
            let (v, g) = self.eval_unchecked(k, p);
            values[k] = v;
            grads[k] = g;
        }
    }
}

/// Affine map from the reference element onto a mesh element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AffineMap {
    /// x = origin + h t on [0, 1].
    Line { origin: f64, h: f64 },
    /// x = origin + J (xi, eta), J columns v1 - v0 and v2 - v0.
    Tri {
        origin: [f64; 2],
        jacobian: [[f64; 2]; 2],
        det: f64,
        inv_t: [[f64; 2]; 2],
    },
}

impl AffineMap {
    pub fn det(&self) -> f64 {
        match *self {
            AffineMap::Line { h, .. } => h,
            AffineMap::Tri { det, .. } => det,
        }
    }

    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            AffineMap::Line { origin, h } => [origin + h * p[0], 0.0],
            AffineMap::Tri {
                origin, jacobian: j, ..
            } => [
                origin[0] + j[0][0] * p[0] + j[0][1] * p[1],
                origin[1] + j[1][0] * p[0] + j[1][1] * p[1],
            ],
        }
    }

    /// Physical gradient J^{-T} g of a reference gradient.
    #[inline]
    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        match *self {
            AffineMap::Line { h, .. } => [g[0] / h, 0.0],
            AffineMap::Tri { inv_t: m, .. } => {
                [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
            }
        }
    }

    /// Reference coordinates of physical point `x` (inverse map).
    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            AffineMap::Line { origin, h } => [(x[0] - origin) / h, 0.0],
            AffineMap::Tri { origin, inv_t: m, .. } => {
                let d = [x[0] - origin[0], x[1] - origin[1]];
                // J^{-1} = (J^{-T})^T
                [m[0][0] * d[0] + m[1][0] * d[1], m[0][1] * d[0] + m[1][1] * d[1]]
            }
        }
    }
}

/// Map of element `element` of `mesh` onto its reference element.
pub fn affine_map(mesh: &Mesh, element: usize) -> Result<AffineMap> {
    if element >= mesh.n_elements() {
        return Err(FemError::IndexOutOfRange {
            index: element,
            bound: mesh.n_elements(),
        });
    }
    match mesh {
        Mesh::Interval(m) => {
            let (a, b) = m.element(element);
            let h = b - a;
            if !(h > 0.0) {
                return Err(FemError::DegenerateElement { element, det: h });
            }
            Ok(AffineMap::Line { origin: a, h })
        }
        Mesh::Triangle(m) => {
            let [v0, v1, v2] = m.triangle_coords(element);
            let j = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(FemError::DegenerateElement { element, det });
            }
            let inv_t = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
            Ok(AffineMap::Tri {
                origin: v0,
                jacobian: j,
                det,
                inv_t,
            })
        }
    }
}

/// Global enumeration of the degrees of freedom of one space on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub space: FeSpaceTag,
    n_dofs: usize,
    element_dofs: Vec<usize>,
    boundary: BTreeMap<usize, BTreeSet<u32>>,
    dof_coords: Vec<[f64; 2]>,
}

impl DofMap {
    pub fn kind(&self) -> FeKind {
        self.space.kind
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_elements(&self) -> usize {
        self.element_dofs.len() / self.space.kind.n_local()
    }

    /// Global dofs of element `e` in local order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let n = self.space.kind.n_local();
        &self.element_dofs[e * n..(e + 1) * n]
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    /// Boundary dofs with the labels of their incident boundary facets.
    pub fn boundary_dofs(&self) -> &BTreeMap<usize, BTreeSet<u32>> {
        &self.boundary
    }

    /// Dofs touching a boundary facet labeled `label`.
    pub fn dofs_with_label(&self, label: u32) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .filter(move |(_, l)| l.contains(&label))
            .map(|(&d, _)| d)
    }
}

/// Enumerate dofs: vertex dofs in vertex order, then (P2) one dof per edge in
/// sorted vertex-pair order.
pub fn build_dofmap(mesh: &Mesh, kind: FeKind) -> Result<DofMap> {
    let space = FeSpaceTag {
        kind,
        constrained: false,
    };
    match (mesh, kind) {
        (Mesh::Interval(m), FeKind::P1Line) => {
            let n = m.n_vertices();
            let element_dofs = (0..m.n_elements()).flat_map(|e| [e, e + 1]).collect();
            let [left, right] = m.boundary_labels();
            let mut boundary = BTreeMap::new();
            boundary.insert(0, BTreeSet::from([left]));
            boundary.entry(n - 1).or_insert_with(BTreeSet::new).insert(right);
            Ok(DofMap {
                space,
                n_dofs: n,
                element_dofs,
                boundary,
                dof_coords: m.vertices().iter().map(|&x| [x, 0.0]).collect(),
            })
        }
        (Mesh::Triangle(m), FeKind::P1Tri) => {
            let mut boundary: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
            for e in m.boundary_edges() {
                for v in e.vertices {
                    boundary.entry(v).or_default().insert(e.label);
                }
            }
            Ok(DofMap {
                space,
                n_dofs: m.n_vertices(),
                element_dofs: m.triangles().iter().flatten().copied().collect(),
                boundary,
                dof_coords: m.vertices().to_vec(),
            })
        }
        (Mesh::Triangle(m), FeKind::P2Tri) => {
            let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
            let mut edges: Vec<(usize, usize)> = m
                .triangles()
                .iter()
                .flat_map(|t| [key(t[0], t[1]), key(t[1], t[2]), key(t[0], t[2])])
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let nv = m.n_vertices();
            let edge_index: HashMap<(usize, usize), usize> =
                edges.iter().enumerate().map(|(i, &e)| (e, nv + i)).collect();

            let mut element_dofs = Vec::with_capacity(6 * m.n_triangles());
            for t in m.triangles() {
                element_dofs.extend_from_slice(t);
                element_dofs.push(edge_index[&key(t[0], t[1])]);
                element_dofs.push(edge_index[&key(t[1], t[2])]);
                element_dofs.push(edge_index[&key(t[0], t[2])]);
            }
            let verts = m.vertices();
            let mut dof_coords = verts.to_vec();
            dof_coords.extend(edges.iter().map(|&(a, b)| {
                [
                    0.5 * (verts[a][0] + verts[b][0]),
                    0.5 * (verts[a][1] + verts[b][1]),
                ]
            }));

            let mut boundary: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
            for e in m.boundary_edges() {
                let [a, b] = e.vertices;
                let mid = *edge_index.get(&key(a, b)).ok_or_else(|| {
                    FemError::invalid(format!("boundary edge ({a}, {b}) is not a mesh edge"))
                })?;
                for d in [a, b, mid] {
                    boundary.entry(d).or_default().insert(e.label);
                }
            }
            Ok(DofMap {
                space,
                n_dofs: nv + edges.len(),
                element_dofs,
                boundary,
                dof_coords,
            })
        }
        _ => Err(FemError::invalid(format!(
            "space {kind:?} does not fit a {}D mesh",
            mesh.dim()
        ))),
    }
}

/// A mesh together with a dof map on it.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    dofmap: DofMap,
    maps: Vec<AffineMap>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, kind: FeKind) -> Result<Arc<Self>> {
        let dofmap = build_dofmap(&mesh, kind)?;
        let maps = (0..mesh.n_elements())
            .map(|e| affine_map(&mesh, e))
            .collect::<Result<_>>()?;
        Ok(Arc::new(Self { mesh, dofmap, maps }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn kind(&self) -> FeKind {
        self.dofmap.kind()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    pub fn n_elements(&self) -> usize {
        self.maps.len()
    }

    pub fn element_map(&self, e: usize) -> &AffineMap {
        &self.maps[e]
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn([f64; 2]) -> f64) -> FemField {
        FemField {
            space: Arc::clone(self),
            coefficients: self.dofmap.dof_coords().iter().map(|&p| f(p)).collect(),
        }
    }

    /// Element containing physical point `x` with its reference coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let tol = 1e-12;
        self.maps.iter().enumerate().find_map(|(e, map)| {
            let r = map.inverse(x);
            let inside = match map {
                AffineMap::Line { .. } => r[0] >= -tol && r[0] <= 1.0 + tol,
                AffineMap::Tri { .. } => r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol,
            };
            inside.then_some((e, r))
        })
    }
}

/// Coefficient vector over a space.
#[derive(Debug, Clone)]
pub struct FemField {
    space: Arc<FeSpace>,
    coefficients: Vec<f64>,
}

impl PartialEq for FemField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) && self.coefficients == other.coefficients
    }
}

impl FemField {
    pub fn new(space: Arc<FeSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.n_dofs() {
            return Err(FemError::DimensionMismatch(format!(
                "{} coefficients for a space with {} dofs",
                coefficients.len(),
                space.n_dofs()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        Self {
            space,
            coefficients: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Value at reference point `p` of element `e`.
    pub fn eval(&self, e: usize, p: [f64; 2]) -> f64 {
        let kind = self.space.kind();
        self.space
            .dofmap()
            .element_dofs(e)
            .iter()
            .enumerate()
            .map(|(k, &d)| self.coefficients[d] * kind.eval_unchecked(k, p).0)
            .sum()
    }

    /// Physical gradient at reference point `p` of element `e`.
    pub fn eval_gradient(&self, e: usize, p: [f64; 2]) -> [f64; 2] {
        let kind = self.space.kind();
        let mut g = [0.0; 2];
        for (k, &d) in self.space.dofmap().element_dofs(e).iter().enumerate() {
            let r = kind.eval_unchecked(k, p).1;
            g[0] += self.coefficients[d] * r[0];
            g[1] += self.coefficients[d] * r[1];
        }
        self.space.element_map(e).gradient(g)
    }

    /// Value at an arbitrary physical point, `None` outside the mesh.
    pub fn eval_at(&self, x: [f64; 2]) -> Option<f64> {
        self.space.locate(x).map(|(e, r)| self.eval(e, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, BoundaryEdge, DomainSpec, TriMesh};

    fn reference_triangle() -> Arc<Mesh> {
        let b = |a, c| BoundaryEdge {
            vertices: [a, c],
            label: 1,
        };
        Arc::new(Mesh::Triangle(
            TriMesh::from_parts(
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
                vec![b(0, 1), b(1, 2), b(2, 0)],
            )
            .unwrap(),
        ))
    }

    fn unit_square(n: usize) -> Arc<Mesh> {
        let spec = DomainSpec::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
            nx: n,
            ny: n,
        };
        Arc::new(spec.build().unwrap())
    }

    #[test]
    fn kronecker_delta_at_nodes() {
        for kind in [FeKind::P1Line, FeKind::P1Tri, FeKind::P2Tri] {
            for (i, &node) in kind.nodes().iter().enumerate() {
                for k in 0..kind.n_local() {
                    let v = kind.eval(k, node).unwrap().0;
                    assert_eq!(
                        v,
                        if i == k { 1.0 } else { 0.0 },
                        "{kind:?} basis {k} at node {i}"
                    );
                }
            }
        }
        assert_eq!(FeKind::P1Tri.eval(0, [0.0, 0.0]).unwrap().0, 1.0);
        assert_eq!(FeKind::P1Tri.eval(0, [1.0, 0.0]).unwrap().0, 0.0);
        assert!(FeKind::P2Tri.eval(6, [0.0, 0.0]).is_err());
    }

    #[test]
    fn reference_map_is_identity() {
        let m = affine_map(&reference_triangle(), 0).unwrap();
        match m {
            AffineMap::Tri { jacobian, det, .. } => {
                assert_eq!(jacobian, [[1.0, 0.0], [0.0, 1.0]]);
                assert_eq!(det, 1.0);
            }
            _ => unreachable!(),
        }
        let big = Mesh::Triangle(
            TriMesh::from_parts(vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]], vec![[0, 1, 2]], vec![]).unwrap(),
        );
        assert_eq!(affine_map(&big, 0).unwrap().det(), 4.0);
    }

    #[test]
    fn one_d_hat_slopes() {
        let mesh = Mesh::Interval(build_interval_mesh(0.0, 1.0, 5).unwrap());
        let map = affine_map(&mesh, 1).unwrap();
        assert!((map.det() - 0.2).abs() < 1e-15);
        let left = map.gradient(FeKind::P1Line.eval(0, [0.5, 0.0]).unwrap().1)[0];
        let right = map.gradient(FeKind::P1Line.eval(1, [0.5, 0.0]).unwrap().1)[0];
        assert!((left + 5.0).abs() < 1e-12 && (right - 5.0).abs() < 1e-12);
    }

    #[test]
    fn dof_counts() {
        let interval = Mesh::Interval(build_interval_mesh(0.0, 1.0, 5).unwrap());
        let d = build_dofmap(&interval, FeKind::P1Line).unwrap();
        assert_eq!(d.n_dofs(), 6);
        assert_eq!(d.boundary_dofs().keys().copied().collect::<Vec<_>>(), vec![0, 5]);

        assert_eq!(
            build_dofmap(&reference_triangle(), FeKind::P2Tri)
                .unwrap()
                .n_dofs(),
            6
        );

        let sq = unit_square(1);
        let d = build_dofmap(&sq, FeKind::P2Tri).unwrap();
        assert_eq!(d.n_dofs(), 9);
        // every dof of the two-triangle square touches the boundary except the diagonal midpoint
        assert_eq!(d.boundary_dofs().len(), 8);
        assert!(build_dofmap(&sq, FeKind::P1Line).is_err());
    }

    #[test]
    fn shared_edge_midpoint_is_consistent() {
        let space = FeSpace::new(unit_square(3), FeKind::P2Tri).unwrap();
        let field = space.interpolate(|[x, y]| (3.0 * x).sin() + x * y * y);
        let tri = space.mesh().as_tri().unwrap();
        let mut owners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, t) in tri.triangles().iter().enumerate() {
            for (local, (a, b)) in [(3, (t[0], t[1])), (4, (t[1], t[2])), (5, (t[0], t[2]))] {
                owners.entry((a.min(b), a.max(b))).or_default().push((e, local));
            }
        }
        let nodes = FeKind::P2Tri.nodes();
        for list in owners.values().filter(|l| l.len() == 2) {
            let (e0, l0) = list[0];
            let (e1, l1) = list[1];
            assert_eq!(
                space.dofmap().element_dofs(e0)[l0],
                space.dofmap().element_dofs(e1)[l1]
            );
            assert_eq!(field.eval(e0, nodes[l0]), field.eval(e1, nodes[l1]));
        }
    }

    #[test]
    fn field_reproduction() {
        let mesh = unit_square(2);
        let p1 = FeSpace::new(Arc::clone(&mesh), FeKind::P1Tri).unwrap();
        let ones = p1.interpolate(|_| 1.0);
        assert!((ones.eval(3, [0.2, 0.3]) - 1.0).abs() < 1e-15);
        assert!(ones.eval_gradient(3, [0.2, 0.3]).iter().all(|g| g.abs() < 1e-14));

        let fx = p1.interpolate(|p| p[0]);
        let c = p1.element_map(5).map([1.0 / 3.0, 1.0 / 3.0]);
        assert!((fx.eval(5, [1.0 / 3.0, 1.0 / 3.0]) - c[0]).abs() < 1e-15);

        let p2 = FeSpace::new(mesh, FeKind::P2Tri).unwrap();
        let sq = p2.interpolate(|p| p[0] * p[0]);
        for &x in &[[0.13, 0.77], [0.5, 0.5], [0.91, 0.04]] {
            assert!((sq.eval_at(x).unwrap() - x[0] * x[0]).abs() < 1e-14);
        }
        assert!(sq.eval_at([1.5, 0.5]).is_none());
    }
}

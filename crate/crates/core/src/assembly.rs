//! Element matrices, global assembly and boundary conditions.
//!
//! Local matrices are indexed (test, trial): entry (a, b) integrates the
//! form with test basis a and trial basis b. Global matrices are the sum of
//! scattered local blocks, so the result does not depend on element order
//! beyond floating-point commutativity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::elements::{AffineMap, DofMap, FeKind, FeSpace, FemField};
use crate::error::{FemError, Result};
use crate::linalg::{SparseMatrix, TripletMatrix};
use crate::mesh::Mesh;
use crate::quadrature::{gauss3_interval, map_to_interval, triangle_rule, QuadratureRule};

type SpaceFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Scalar function of position and time.
#[derive(Clone)]
pub struct SpaceTimeFn {
    func: Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>,
    time_dependent: bool,
    constant: Option<f64>,
}

impl SpaceTimeFn {
    pub fn new(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            func: Arc::new(f),
            time_dependent: true,
            constant: None,
        }
    }

    /// A function that ignores time.
    pub fn steady(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            func: Arc::new(move |x, _| f(x)),
            time_dependent: false,
            constant: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            func: Arc::new(move |_, _| c),
            time_dependent: false,
            constant: Some(c),
        }
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        (self.func)(x, t)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }
}

impl fmt::Debug for SpaceTimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "SpaceTimeFn({c})"),
            None => write!(
                f,
                "SpaceTimeFn(<closure>, time_dependent: {})",
                self.time_dependent
            ),
        }
    }
}

/// Scalar coefficient of a bilinear form.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(SpaceFn),
    /// Evaluated at quadrature points; must live on the assembly mesh.
    Field(FemField),
}

impl Coefficient {
    pub fn function(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    #[inline]
    fn eval(&self, e: usize, p: [f64; 2], x: [f64; 2]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(x),
            Coefficient::Field(u) => u.eval(e, p),
        }
    }

    fn check_mesh(&self, mesh: &Arc<Mesh>) -> Result<()> {
        match self {
            Coefficient::Field(u) => same_mesh(u.space().mesh(), mesh),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function(_) => write!(f, "Function(<closure>)"),
            Coefficient::Field(u) => write!(f, "Field({:?})", u.space().kind()),
        }
    }
}

/// Vector (advection) coefficient.
#[derive(Clone)]
pub enum VectorCoefficient {
    Constant([f64; 2]),
    Function(VectorFn),
    /// Component fields evaluated at quadrature points.
    Fields(FemField, FemField),
}

impl VectorCoefficient {
    pub fn function(f: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorCoefficient::Function(Arc::new(f))
    }

    #[inline]
    fn eval(&self, e: usize, p: [f64; 2], x: [f64; 2]) -> [f64; 2] {
        match self {
            VectorCoefficient::Constant(c) => *c,
            VectorCoefficient::Function(f) => f(x),
            VectorCoefficient::Fields(u, v) => [u.eval(e, p), v.eval(e, p)],
        }
    }

    fn check_mesh(&self, mesh: &Arc<Mesh>) -> Result<()> {
        match self {
            VectorCoefficient::Fields(u, v) => {
                same_mesh(u.space().mesh(), mesh)?;
                same_mesh(v.space().mesh(), mesh)
            }
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorCoefficient::Constant(c) => c[0] == 0.0 && c[1] == 0.0,
            VectorCoefficient::Fields(u, v) => {
                u.coefficients().iter().chain(v.coefficients()).all(|&c| c == 0.0)
            }
            VectorCoefficient::Function(_) => false,
        }
    }
}

impl fmt::Debug for VectorCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorCoefficient::Constant(c) => write!(f, "Constant({c:?})"),
            VectorCoefficient::Function(_) => write!(f, "Function(<closure>)"),
            VectorCoefficient::Fields(u, _) => write!(f, "Fields({:?})", u.space().kind()),
        }
    }
}

fn same_mesh(a: &Arc<Mesh>, b: &Arc<Mesh>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(FemError::invalid("coefficient field lives on a different mesh"))
    }
}

/// Bilinear forms the solvers need.
#[derive(Clone, Debug)]
pub enum Form {
    /// int kappa grad(trial) . grad(test)
    Stiffness(Coefficient),
    /// int c trial test
    Mass(Coefficient),
    /// int (beta . grad(trial)) test
    Convection(VectorCoefficient),
    /// int d(trial)/dx_component test; the mixed velocity/pressure coupling.
    Divergence { component: usize },
}

impl Form {
    fn check(&self, mesh: &Arc<Mesh>) -> Result<()> {
        match self {
            Form::Stiffness(c) | Form::Mass(c) => c.check_mesh(mesh),
            Form::Convection(b) => b.check_mesh(mesh),
            Form::Divergence { component } if *component > 1 => Err(FemError::invalid(format!(
                "divergence component {component} out of range"
            ))),
            Form::Divergence { .. } => Ok(()),
        }
    }
}

/// Matrix plus right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Row-major dense element matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl LocalMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.cols + b]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Quadrature used on every element of a mesh: Gauss-3 mapped onto the
/// reference interval [0, 1] in 1D, the degree-5 triangle rule in 2D.
pub fn element_rule(mesh: &Mesh) -> QuadratureRule {
    match mesh {
        Mesh::Interval(_) => map_to_interval(&gauss3_interval(), 0.0, 1.0).expect("0 < 1"),
        Mesh::Triangle(_) => triangle_rule(5).expect("degree 5 is supported"),
    }
}

/// Basis values and physical gradients of a space at one reference point.
struct BasisAt {
    values: [f64; 6],
    grads: [[f64; 2]; 6],
}

impl BasisAt {
    fn new(kind: FeKind, map: &AffineMap, p: [f64; 2]) -> Self {
        let mut b = BasisAt {
            values: [0.0; 6],
            grads: [[0.0; 2]; 6],
        };
        kind.eval_all(p, &mut b.values, &mut b.grads);
        for g in &mut b.grads[..kind.n_local()] {
            *g = map.gradient(*g);
        }
        b
    }
}

fn check_pair(test: &FeSpace, trial: &FeSpace) -> Result<()> {
    same_mesh(test.mesh(), trial.mesh())
}

/// Element matrix of `form` on element `e`.
pub fn local_matrix(test: &FeSpace, trial: &FeSpace, e: usize, form: &Form) -> Result<LocalMatrix> {
    check_pair(test, trial)?;
    form.check(test.mesh())?;
    if e >= test.n_elements() {
        return Err(FemError::IndexOutOfRange {
            index: e,
            bound: test.n_elements(),
        });
    }
    Ok(local_matrix_unchecked(
        test,
        trial,
        e,
        form,
        &element_rule(test.mesh()),
    ))
}

fn local_matrix_unchecked(
    test: &FeSpace,
    trial: &FeSpace,
    e: usize,
    form: &Form,
    rule: &QuadratureRule,
) -> LocalMatrix {
    let (tk, rk) = (test.kind(), trial.kind());
    let (nt, nr) = (tk.n_local(), rk.n_local());
    let map = test.element_map(e);
    let jac = map.det().abs();
    let mut out = LocalMatrix::zeros(nt, nr);
    for (p, w) in rule.iter() {
        let x = map.map(p);
        let wq = w * jac;
        let phi = BasisAt::new(tk, map, p);
        let psi = BasisAt::new(rk, map, p);
        match form {
            Form::Stiffness(kappa) => {
                let c = wq * kappa.eval(e, p, x);
                for a in 0..nt {
                    let ga = phi.grads[a];
                    for b in 0..nr {
                        let gb = psi.grads[b];
                        out.data[a * nr + b] += c * (ga[0] * gb[0] + ga[1] * gb[1]);
                    }
                }
            }
            Form::Mass(coef) => {
                let c = wq * coef.eval(e, p, x);
                for a in 0..nt {
                    for b in 0..nr {
                        out.data[a * nr + b] += c * phi.values[a] * psi.values[b];
                    }
                }
            }
            Form::Convection(beta) => {
                let bv = beta.eval(e, p, x);
                for b in 0..nr {
                    let adv = wq * (bv[0] * psi.grads[b][0] + bv[1] * psi.grads[b][1]);
                    for a in 0..nt {
                        out.data[a * nr + b] += adv * phi.values[a];
                    }
                }
            }
            Form::Divergence { component } => {
                for b in 0..nr {
                    let d = wq * psi.grads[b][*component];
                    for a in 0..nt {
                        out.data[a * nr + b] += d * phi.values[a];
                    }
                }
            }
        }
    }
    out
}

/// Add `local` into `global` at rows `test_dofs` and columns `trial_dofs`.
pub fn scatter_add(
    global: &mut TripletMatrix,
    local: &LocalMatrix,
    test_dofs: &[usize],
    trial_dofs: &[usize],
) -> Result<()> {
    if test_dofs.len() != local.rows || trial_dofs.len() != local.cols {
        return Err(FemError::DimensionMismatch(format!(
            "{}x{} local matrix with {} row and {} column dofs",
            local.rows,
            local.cols,
            test_dofs.len(),
            trial_dofs.len()
        )));
    }
    for (a, &i) in test_dofs.iter().enumerate() {
        for (b, &j) in trial_dofs.iter().enumerate() {
            global.push(i, j, local.get(a, b))?;
        }
    }
    Ok(())
}

/// Global matrix of `form`, `test.n_dofs()` x `trial.n_dofs()`.
pub fn assemble_bilinear(test: &FeSpace, trial: &FeSpace, form: &Form) -> Result<SparseMatrix> {
    let order: Vec<usize> = (0..test.n_elements()).collect();
    assemble_bilinear_ordered(test, trial, form, &order)
}

pub(crate) fn assemble_bilinear_ordered(
    test: &FeSpace,
    trial: &FeSpace,
    form: &Form,
    order: &[usize],
) -> Result<SparseMatrix> {
    check_pair(test, trial)?;
    form.check(test.mesh())?;
    let rule = element_rule(test.mesh());
    let (nt, nr) = (test.kind().n_local(), trial.kind().n_local());
    let mut global = TripletMatrix::with_capacity(test.n_dofs(), trial.n_dofs(), order.len() * nt * nr);
    for &e in order {
        let local = local_matrix_unchecked(test, trial, e, form, &rule);
        scatter_add(
            &mut global,
            &local,
            test.dofmap().element_dofs(e),
            trial.dofmap().element_dofs(e),
        )?;
    }
    Ok(global.finalize())
}

/// Load vector b_j = int f phi_j.
pub fn assemble_load(space: &FeSpace, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let rule = element_rule(space.mesh());
    let kind = space.kind();
    let mut b = vec![0.0; space.n_dofs()];
    for e in 0..space.n_elements() {
        let map = space.element_map(e);
        let jac = map.det().abs();
        let dofs = space.dofmap().element_dofs(e);
        for (p, w) in rule.iter() {
            let fx = f(map.map(p)) * w * jac;
            if fx == 0.0 {
                continue;
            }
            for (k, &d) in dofs.iter().enumerate() {
                b[d] += fx * kind.eval_unchecked(k, p).0;
            }
        }
    }
    b
}

/// Boundary term b_j = int_{Gamma_label} h phi_j, Gauss-3 on each facet.
pub fn assemble_neumann(space: &FeSpace, label: u32, h: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    let mut b = vec![0.0; space.n_dofs()];
    match &**space.mesh() {
        Mesh::Interval(m) => {
            let [left, right] = m.boundary_labels();
            if label != left && label != right {
                return Err(FemError::UnknownLabel(label));
            }
            let last = m.n_vertices() - 1;
            if label == left {
                b[0] += h([m.vertices()[0], 0.0]);
            }
            if label == right {
                b[last] += h([m.vertices()[last], 0.0]);
            }
        }
        Mesh::Triangle(m) => {
            if !m.labels().contains(&label) {
                return Err(FemError::UnknownLabel(label));
            }
            let owners = m.boundary_owners()?;
            let gauss = map_to_interval(&gauss3_interval(), 0.0, 1.0)?;
            let kind = space.kind();
            for (edge, &t) in m.boundary_edges().iter().zip(&owners) {
                if edge.label != label {
                    continue;
                }
                let [pa, pb] = edge.vertices.map(|v| m.vertices()[v]);
                let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                let map = space.element_map(t);
                let dofs = space.dofmap().element_dofs(t);
                for (s, w) in gauss.iter() {
                    let x = [pa[0] + s[0] * (pb[0] - pa[0]), pa[1] + s[0] * (pb[1] - pa[1])];
                    let hx = h(x) * w * len;
                    let r = map.inverse(x);
                    for (k, &d) in dofs.iter().enumerate() {
                        b[d] += hx * kind.eval_unchecked(k, r).0;
                    }
                }
            }
        }
    }
    Ok(b)
}

/// Dirichlet data per boundary label. A dof on several labeled facets takes
/// the value of the lowest label.
#[derive(Debug, Clone, Default)]
pub struct DirichletBc {
    pub values: BTreeMap<u32, SpaceTimeFn>,
}

impl DirichletBc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: u32, g: SpaceTimeFn) -> Self {
        self.values.insert(label, g);
        self
    }

    pub fn labels(&self) -> BTreeSet<u32> {
        self.values.keys().copied().collect()
    }

    /// Constrained dof -> label supplying its value.
    pub fn constrained_dofs(&self, dofmap: &DofMap) -> Result<BTreeMap<usize, u32>> {
        let mut out = BTreeMap::new();
        for &label in self.values.keys() {
            let mut any = false;
            for d in dofmap.dofs_with_label(label) {
                any = true;
                out.entry(d).or_insert(label);
            }
            if !any {
                return Err(FemError::UnknownLabel(label));
            }
        }
        Ok(out)
    }

    /// Lifting vector x_d: g(dof, t) on constrained dofs, zero elsewhere.
    pub fn lifting(&self, dofmap: &DofMap, t: f64) -> Result<Vec<f64>> {
        let mut x = vec![0.0; dofmap.n_dofs()];
        for (d, label) in self.constrained_dofs(dofmap)? {
            x[d] = self.values[&label].eval(dofmap.dof_coords()[d], t);
        }
        Ok(x)
    }
}

/// Splits dofs into interior and constrained sets and reduces systems.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletReduction {
    n: usize,
    interior: Vec<usize>,
    constrained: Vec<usize>,
}

impl DirichletReduction {
    pub fn new(n: usize, constrained: impl IntoIterator<Item = usize>) -> Self {
        let mut is_fixed = vec![false; n];
        for d in constrained {
            is_fixed[d] = true;
        }
        let interior = (0..n).filter(|&d| !is_fixed[d]).collect();
        let constrained = (0..n).filter(|&d| is_fixed[d]).collect();
        Self {
            n,
            interior,
            constrained,
        }
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn n_dofs(&self) -> usize {
        self.n
    }

    pub fn interior_matrix(&self, a: &SparseMatrix) -> SparseMatrix {
        a.submatrix(&self.interior, &self.interior)
    }

    /// (b - A x_d) restricted to the interior dofs.
    pub fn reduced_rhs(&self, a: &SparseMatrix, b: &[f64], lifting: &[f64]) -> Vec<f64> {
        let ax = a.spmv(lifting);
        self.interior.iter().map(|&i| b[i] - ax[i]).collect()
    }

    /// Full vector: the lifting with the interior solution scattered in.
    pub fn reconstruct(&self, interior_solution: &[f64], lifting: &[f64]) -> Vec<f64> {
        let mut x = lifting.to_vec();
        for (&i, &v) in self.interior.iter().zip(interior_solution) {
            x[i] = v;
        }
        x
    }
}

/// Interior system after Dirichlet elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub reduction: DirichletReduction,
    pub lifting: Vec<f64>,
}

impl ReducedSystem {
    pub fn interior(&self) -> &[usize] {
        self.reduction.interior()
    }

    pub fn reconstruct(&self, interior_solution: &[f64]) -> Vec<f64> {
        self.reduction.reconstruct(interior_solution, &self.lifting)
    }
}

/// Eliminate the Dirichlet dofs of `bc` evaluated at time `t`.
pub fn apply_dirichlet(
    system: &LinearSystem,
    bc: &DirichletBc,
    dofmap: &DofMap,
    t: f64,
) -> Result<ReducedSystem> {
    let n = dofmap.n_dofs();
    if system.matrix.shape() != (n, n) || system.rhs.len() != n {
        return Err(FemError::DimensionMismatch(format!(
            "system {:?} does not match {n} dofs",
            system.matrix.shape()
        )));
    }
    let fixed = bc.constrained_dofs(dofmap)?;
    let lifting = bc.lifting(dofmap, t)?;
    let reduction = DirichletReduction::new(n, fixed.keys().copied());
    Ok(ReducedSystem {
        matrix: reduction.interior_matrix(&system.matrix),
        rhs: reduction.reduced_rhs(&system.matrix, &system.rhs, &lifting),
        reduction,
        lifting,
    })
}

/// int_Omega field
pub fn integrate_field(field: &FemField) -> f64 {
    let space = field.space();
    let rule = element_rule(space.mesh());
    (0..space.n_elements())
        .map(|e| {
            let jac = space.element_map(e).det().abs();
            rule.iter().map(|(p, w)| w * jac * field.eval(e, p)).sum::<f64>()
        })
        .sum()
}

/// ||field - exact||_{L2} by element quadrature.
pub fn l2_error(field: &FemField, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let space = field.space();
    let rule = element_rule(space.mesh());
    (0..space.n_elements())
        .map(|e| {
            let map = space.element_map(e);
            let jac = map.det().abs();
            rule.iter()
                .map(|(p, w)| {
                    let d = field.eval(e, p) - exact(map.map(p));
                    w * jac * d * d
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn l2_norm(field: &FemField) -> f64 {
    l2_error(field, |_| 0.0)
}

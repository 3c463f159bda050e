//! Python bindings. Coefficients and boundary data are given as numbers or
//! as expression strings in x, y, t (the config-file grammar).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::femkit::advdiff::{run, steady_solve, AdvDiffProblem};
use ::femkit::assembly::{
    assemble_bilinear, integrate_field, l2_error, l2_norm, Coefficient, Form, SpaceTimeFn, VectorCoefficient,
};
use ::femkit::elements::{FeKind, FeSpace, FemField};
use ::femkit::io::{field_csv, parse_config, run_config, Expr};
use ::femkit::linalg::SolveMethod;
use ::femkit::mesh::{mesh_metrics, read_mesh, validate_conformity, write_mesh, DomainSpec, Mesh};
use ::femkit::poisson::{solve_poisson, PoissonProblem};
use ::femkit::quadrature::{gauss3_interval, triangle_rule};
use ::femkit::stokes::{boundary_flux, solve_stokes, StokesProblem, StokesSolution, DEFAULT_EPSILON};
use ::femkit::FemError as CoreError;

fn py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn expr(obj: &Bound<'_, PyAny>) -> PyResult<Expr> {
    if let Ok(v) = obj.extract::<f64>() {
        return Ok(Expr::Num(v));
    }
    let s: String = obj
        .extract()
        .map_err(|_| PyValueError::new_err("expected a number or an expression string"))?;
    Expr::parse(&s).map_err(py_err)
}

fn stfn(obj: Option<&Bound<'_, PyAny>>) -> PyResult<SpaceTimeFn> {
    obj.map_or(Ok(SpaceTimeFn::constant(0.0)), |o| Ok(expr(o)?.to_fn()))
}

fn labelled<'py>(dict: Option<&Bound<'py, PyDict>>) -> PyResult<BTreeMap<u32, Bound<'py, PyAny>>> {
    let mut out = BTreeMap::new();
    if let Some(d) = dict {
        for (k, v) in d.iter() {
            out.insert(k.extract::<u32>()?, v);
        }
    }
    Ok(out)
}

fn fe_kind(space: &str, mesh: &Mesh) -> PyResult<FeKind> {
    match (space, mesh.dim()) {
        (_, 1) => Ok(FeKind::P1Line),
        ("p1", _) => Ok(FeKind::P1Tri),
        ("p2", _) => Ok(FeKind::P2Tri),
        _ => Err(PyValueError::new_err(format!(
            "unknown space {space:?} (p1 or p2)"
        ))),
    }
}

fn kind_name(k: FeKind) -> &'static str {
    match k {
        FeKind::P1Line | FeKind::P1Tri => "p1",
        FeKind::P2Tri => "p2",
    }
}

/// A 1D interval mesh or a labelled triangulation.
#[pyclass(name = "Mesh", module = "femkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Arc<Mesh>,
}

#[pymethods]
impl PyMesh {
    /// Build from a domain spec such as "rectangle(0,1,0,1,8,8)" or "dike(45,10)".
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: DomainSpec = spec.parse().map_err(py_err)?;
        Ok(PyMesh {
            inner: Arc::new(spec.build().map_err(py_err)?),
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyMesh {
            inner: Arc::new(Mesh::Triangle(read_mesh(path).map_err(py_err)?)),
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let tri = self
            .inner
            .as_tri()
            .ok_or_else(|| PyValueError::new_err("only triangulations can be written"))?;
        write_mesh(tri, path).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels().into_iter().collect()
    }

    #[getter]
    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    #[getter]
    fn h(&self) -> PyResult<f64> {
        self.inner.h().map_err(py_err)
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner
            .vertex_coords()
            .into_iter()
            .map(|[x, y]| (x, y))
            .collect()
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner
            .as_tri()
            .map_or_else(Vec::new, |t| t.triangles().to_vec())
    }

    /// List of conformity violations (empty when the mesh is valid).
    fn validate(&self) -> Vec<String> {
        self.inner.as_tri().map_or_else(Vec::new, |t| {
            validate_conformity(t)
                .violations
                .iter()
                .map(|v| format!("{v:?}"))
                .collect()
        })
    }

    /// (h, max aspect ratio, quasi-uniformity) of a triangulation.
    fn metrics(&self) -> PyResult<(f64, f64, f64)> {
        let tri = self
            .inner
            .as_tri()
            .ok_or_else(|| PyValueError::new_err("metrics need a triangulation"))?;
        let m = mesh_metrics(tri).map_err(py_err)?;
        Ok((m.h, m.max_aspect, m.quasi_uniformity))
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(dim={}, vertices={}, elements={})",
            self.inner.dim(),
            self.inner.n_vertices(),
            self.inner.n_elements()
        )
    }
}

/// A finite-element function: dof values plus their coordinates.
#[pyclass(name = "Field", module = "femkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: FemField,
}

#[pymethods]
impl PyField {
    #[getter]
    fn space(&self) -> &'static str {
        kind_name(self.inner.space().kind())
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.coefficients().len()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    fn dof_coords(&self) -> Vec<(f64, f64)> {
        self.inner
            .space()
            .dofmap()
            .dof_coords()
            .iter()
            .map(|&[x, y]| (x, y))
            .collect()
    }

    /// Value at a point, or None outside the mesh.
    #[pyo3(signature = (x, y = 0.0))]
    fn __call__(&self, x: f64, y: f64) -> Option<f64> {
        self.inner.eval_at([x, y])
    }

    fn l2_norm(&self) -> f64 {
        l2_norm(&self.inner)
    }

    fn integral(&self) -> f64 {
        integrate_field(&self.inner)
    }

    /// L2 distance to an exact solution given as an expression in x, y.
    fn l2_error(&self, exact: &Bound<'_, PyAny>) -> PyResult<f64> {
        let e = expr(exact)?;
        Ok(l2_error(&self.inner, |x| e.eval(x[0], x[1], 0.0)))
    }

    fn to_csv(&self) -> String {
        field_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.n_dofs()
    }

    fn __repr__(&self) -> String {
        format!("Field(space={}, dofs={})", self.space(), self.n_dofs())
    }
}

/// Velocity components, pressure and diagnostics of a Stokes solve.
#[pyclass(name = "StokesResult", module = "femkit", frozen)]
struct PyStokes {
    inner: StokesSolution,
}

#[pymethods]
impl PyStokes {
    #[getter]
    fn u1(&self) -> PyField {
        PyField {
            inner: self.inner.velocity[0].clone(),
        }
    }

    #[getter]
    fn u2(&self) -> PyField {
        PyField {
            inner: self.inner.velocity[1].clone(),
        }
    }

    #[getter]
    fn pressure(&self) -> PyField {
        PyField {
            inner: self.inner.pressure.clone(),
        }
    }

    /// L2 norm of div u.
    #[getter]
    fn divergence(&self) -> f64 {
        self.inner.divergence
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.report.residual
    }

    /// Outward flux of the velocity through the boundary edges with `label`.
    fn flux(&self, label: u32) -> PyResult<f64> {
        let [u1, u2] = &self.inner.velocity;
        boundary_flux(u1, u2, label).map_err(py_err)
    }
}

/// Solve -div(kappa grad u) = f with Dirichlet and Neumann data per label.
#[pyfunction]
#[pyo3(signature = (mesh, f = None, dirichlet = None, neumann = None, kappa = 1.0, space = "p1", solver = "lu"))]
fn poisson(
    mesh: &PyMesh,
    f: Option<&Bound<'_, PyAny>>,
    dirichlet: Option<&Bound<'_, PyDict>>,
    neumann: Option<&Bound<'_, PyDict>>,
    kappa: f64,
    space: &str,
    solver: &str,
) -> PyResult<PyField> {
    let method = match solver {
        "lu" => SolveMethod::Lu,
        "cg" => SolveMethod::Cg,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown solver {solver:?} (lu or cg)"
            )))
        }
    };
    let mut p = PoissonProblem::new(Arc::clone(&mesh.inner), fe_kind(space, &mesh.inner)?)
        .with_kappa(kappa)
        .with_source(stfn(f)?)
        .with_method(method);
    for (label, g) in labelled(dirichlet)? {
        p = p.with_dirichlet(label, stfn(Some(&g))?);
    }
    for (label, h) in labelled(neumann)? {
        p = p.with_neumann(label, stfn(Some(&h))?);
    }
    Ok(PyField {
        inner: solve_poisson(&p).map_err(py_err)?.field,
    })
}

/// Taylor-Hood Stokes solve. `dirichlet` maps labels to (u1, u2);
/// `neumann` lists do-nothing labels.
#[pyfunction]
#[pyo3(signature = (mesh, mu, dirichlet, neumann = Vec::new(), fx = None, fy = None, epsilon = DEFAULT_EPSILON))]
fn stokes(
    mesh: &PyMesh,
    mu: f64,
    dirichlet: &Bound<'_, PyDict>,
    neumann: Vec<u32>,
    fx: Option<&Bound<'_, PyAny>>,
    fy: Option<&Bound<'_, PyAny>>,
    epsilon: f64,
) -> PyResult<PyStokes> {
    let mut p = StokesProblem::new(Arc::clone(&mesh.inner), mu)
        .with_force(stfn(fx)?, stfn(fy)?)
        .with_epsilon(epsilon);
    for (label, v) in labelled(Some(dirichlet))? {
        let (a, b): (Bound<'_, PyAny>, Bound<'_, PyAny>) = v.extract()?;
        p = p.with_dirichlet(label, stfn(Some(&a))?, stfn(Some(&b))?);
    }
    for label in neumann {
        p = p.with_neumann(label);
    }
    Ok(PyStokes {
        inner: solve_stokes(&p).map_err(py_err)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn advdiff_problem(
    mesh: &PyMesh,
    mu: f64,
    dt: f64,
    t_final: f64,
    beta: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    f: Option<&Bound<'_, PyAny>>,
    u0: Option<&Bound<'_, PyAny>>,
    dirichlet: Option<&Bound<'_, PyDict>>,
    neumann: Vec<u32>,
    space: Option<&str>,
) -> PyResult<AdvDiffProblem> {
    let mut p = AdvDiffProblem::new(Arc::clone(&mesh.inner), mu, dt, t_final)
        .with_source(stfn(f)?)
        .with_initial(stfn(u0)?);
    if let Some((bx, by)) = beta {
        let (bx, by) = (expr(&bx)?, expr(&by)?);
        p = p.with_beta(match (bx.constant_value(), by.constant_value()) {
            (Some(a), Some(b)) => VectorCoefficient::Constant([a, b]),
            _ => VectorCoefficient::function(move |x| [bx.eval(x[0], x[1], 0.0), by.eval(x[0], x[1], 0.0)]),
        });
    }
    if let Some(s) = space {
        p = p.with_kind(fe_kind(s, &mesh.inner)?);
    }
    for (label, g) in labelled(dirichlet)? {
        p = p.with_dirichlet(label, stfn(Some(&g))?);
    }
    for label in neumann {
        p = p.with_neumann(label);
    }
    Ok(p)
}

/// Implicit-Euler advection-diffusion from t = 0 to t_final. Returns
/// (step, t, field) every `every` steps and at the final step.
#[pyfunction]
#[pyo3(signature = (mesh, mu, dt, t_final, beta = None, f = None, u0 = None, dirichlet = None, neumann = Vec::new(), space = None, every = 1))]
#[allow(clippy::too_many_arguments)]
fn advdiff(
    mesh: &PyMesh,
    mu: f64,
    dt: f64,
    t_final: f64,
    beta: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    f: Option<&Bound<'_, PyAny>>,
    u0: Option<&Bound<'_, PyAny>>,
    dirichlet: Option<&Bound<'_, PyDict>>,
    neumann: Vec<u32>,
    space: Option<&str>,
    every: usize,
) -> PyResult<Vec<(usize, f64, PyField)>> {
    let p = advdiff_problem(mesh, mu, dt, t_final, beta, f, u0, dirichlet, neumann, space)?;
    let mut out = Vec::new();
    run(&p, every, |step, t, u| {
        out.push((step, t, PyField { inner: u.clone() }));
        Ok(())
    })
    .map_err(py_err)?;
    Ok(out)
}

/// Steady advection-diffusion; time-dependent data are evaluated at `t`.
#[pyfunction]
#[pyo3(signature = (mesh, mu, beta = None, f = None, dirichlet = None, neumann = Vec::new(), space = None, t = 1.0))]
#[allow(clippy::too_many_arguments)]
fn advdiff_steady(
    mesh: &PyMesh,
    mu: f64,
    beta: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    f: Option<&Bound<'_, PyAny>>,
    dirichlet: Option<&Bound<'_, PyDict>>,
    neumann: Vec<u32>,
    space: Option<&str>,
    t: f64,
) -> PyResult<PyField> {
    let p = advdiff_problem(mesh, mu, t, t, beta, f, None, dirichlet, neumann, space)?;
    Ok(PyField {
        inner: steady_solve(&p).map_err(py_err)?.0,
    })
}

/// Assemble one bilinear form on a single space. `form` is "stiffness",
/// "mass", "convection" (with `beta`) or "divergence_x" / "divergence_y"
/// (P1 test, P2 trial). Returns (rows, cols, values) of the nonzeros.
#[pyfunction]
#[pyo3(signature = (mesh, form, space = "p1", coefficient = None, beta = None))]
fn assemble(
    mesh: &PyMesh,
    form: &str,
    space: &str,
    coefficient: Option<&Bound<'_, PyAny>>,
    beta: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
) -> PyResult<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let m = &mesh.inner;
    let c = match coefficient {
        None => Coefficient::Constant(1.0),
        Some(o) => {
            let e = expr(o)?;
            match e.constant_value() {
                Some(v) => Coefficient::Constant(v),
                None => Coefficient::function(move |x| e.eval(x[0], x[1], 0.0)),
            }
        }
    };
    let (form, test, trial) = match form {
        "stiffness" | "mass" | "convection" => {
            let kind = fe_kind(space, m)?;
            let f = match form {
                "stiffness" => Form::Stiffness(c),
                "mass" => Form::Mass(c),
                _ => {
                    let (bx, by) = beta.ok_or_else(|| PyValueError::new_err("convection needs beta"))?;
                    let (bx, by) = (expr(&bx)?, expr(&by)?);
                    Form::Convection(VectorCoefficient::function(move |x| {
                        [bx.eval(x[0], x[1], 0.0), by.eval(x[0], x[1], 0.0)]
                    }))
                }
            };
            (f, kind, kind)
        }
        "divergence_x" | "divergence_y" => (
            Form::Divergence {
                component: usize::from(form == "divergence_y"),
            },
            FeKind::P1Tri,
            FeKind::P2Tri,
        ),
        _ => return Err(PyValueError::new_err(format!("unknown form {form:?}"))),
    };
    let ts = FeSpace::new(Arc::clone(m), test).map_err(py_err)?;
    let rs = FeSpace::new(Arc::clone(m), trial).map_err(py_err)?;
    let a = assemble_bilinear(&ts, &rs, &form).map_err(py_err)?;
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for (i, j, v) in a.triplets() {
        out.0.push(i);
        out.1.push(j);
        out.2.push(v);
    }
    Ok(out)
}

/// Interpolate an expression into the P1 or P2 space on `mesh`.
#[pyfunction]
#[pyo3(signature = (mesh, f, space = "p1"))]
fn interpolate(mesh: &PyMesh, f: &Bound<'_, PyAny>, space: &str) -> PyResult<PyField> {
    let e = expr(f)?;
    let s = FeSpace::new(Arc::clone(&mesh.inner), fe_kind(space, &mesh.inner)?).map_err(py_err)?;
    Ok(PyField {
        inner: s.interpolate(|x| e.eval(x[0], x[1], 0.0)),
    })
}

/// Points and weights of the three-point Gauss rule on [-1, 1].
#[pyfunction]
fn gauss3() -> (Vec<f64>, Vec<f64>) {
    let r = gauss3_interval();
    (r.points.iter().map(|p| p[0]).collect(), r.weights)
}

/// Points and weights of the degree-5 rule on the reference triangle.
#[pyfunction]
fn triangle_quadrature() -> PyResult<(Vec<(f64, f64)>, Vec<f64>)> {
    let r = triangle_rule(5).map_err(py_err)?;
    Ok((r.points.iter().map(|&[x, y]| (x, y)).collect(), r.weights))
}

/// Run a config file, writing outputs to `out_dir`. Returns the files written.
#[pyfunction]
#[pyo3(signature = (path, out_dir = PathBuf::from(".")))]
fn solve_config(path: PathBuf, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    let cfg = parse_config(path).map_err(py_err)?;
    Ok(run_config(&cfg, out_dir).map_err(py_err)?.files)
}

/// Evaluate an expression string at (x, y, t).
#[pyfunction]
#[pyo3(signature = (source, x = 0.0, y = 0.0, t = 0.0))]
fn evaluate(source: &str, x: f64, y: f64, t: f64) -> PyResult<f64> {
    Ok(Expr::parse(source).map_err(py_err)?.eval(x, y, t))
}

#[pymodule(name = "femkit")]
fn femkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyStokes>()?;
    m.add_function(wrap_pyfunction!(poisson, m)?)?;
    m.add_function(wrap_pyfunction!(stokes, m)?)?;
    m.add_function(wrap_pyfunction!(advdiff, m)?)?;
    m.add_function(wrap_pyfunction!(advdiff_steady, m)?)?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(gauss3, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}

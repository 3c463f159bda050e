//! Scalar diffusion problem -div(kappa grad u) = f with Dirichlet and
//! Neumann data.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::assembly::{
    apply_dirichlet, assemble_bilinear, assemble_load, assemble_neumann, Coefficient, DirichletBc, Form,
    LinearSystem, SpaceTimeFn,
};
use crate::elements::{FeKind, FeSpace, FemField};
use crate::error::{FemError, Result};
use crate::linalg::{cg_solve, lu_solve, SolveMethod, SolveReport};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub mesh: Arc<Mesh>,
    pub kind: FeKind,
    pub kappa: f64,
    pub source: SpaceTimeFn,
    pub dirichlet: DirichletBc,
    /// Flux data kappa du/dn = h per label; omitted labels are zero-flux.
    pub neumann: BTreeMap<u32, SpaceTimeFn>,
    pub method: SolveMethod,
}

impl PoissonProblem {
    pub fn new(mesh: Arc<Mesh>, kind: FeKind) -> Self {
        Self {
            mesh,
            kind,
            kappa: 1.0,
            source: SpaceTimeFn::constant(0.0),
            dirichlet: DirichletBc::new(),
            neumann: BTreeMap::new(),
            method: SolveMethod::Lu,
        }
    }

    pub fn with_source(mut self, f: SpaceTimeFn) -> Self {
        self.source = f;
        self
    }

    pub fn with_dirichlet(mut self, label: u32, g: SpaceTimeFn) -> Self {
        self.dirichlet.values.insert(label, g);
        self
    }

    pub fn with_neumann(mut self, label: u32, h: SpaceTimeFn) -> Self {
        self.neumann.insert(label, h);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub field: FemField,
    pub system: LinearSystem,
    pub reduced_rhs: Vec<f64>,
    pub report: SolveReport,
}

pub fn solve_poisson(problem: &PoissonProblem) -> Result<PoissonSolution> {
    if !(problem.kappa > 0.0) {
        return Err(FemError::invalid(format!(
            "kappa must be positive, got {}",
            problem.kappa
        )));
    }
    if problem.dirichlet.values.is_empty() {
        return Err(FemError::invalid(
            "pure Neumann problems are not supported; give a Dirichlet label",
        ));
    }
    let space = FeSpace::new(Arc::clone(&problem.mesh), problem.kind)?;
    let matrix = assemble_bilinear(
        &space,
        &space,
        &Form::Stiffness(Coefficient::Constant(problem.kappa)),
    )?;
    let f = &problem.source;
    let mut rhs = assemble_load(&space, |x| f.eval(x, 0.0));
    for (&label, h) in &problem.neumann {
        if h.is_zero() {
            continue;
        }
        let b = assemble_neumann(&space, label, |x| h.eval(x, 0.0))?;
        rhs.iter_mut().zip(b).for_each(|(r, v)| *r += v);
    }
    let system = LinearSystem { matrix, rhs };
    let reduced = apply_dirichlet(&system, &problem.dirichlet, space.dofmap(), 0.0)?;
    let (x, report) = match problem.method {
        SolveMethod::Lu => lu_solve(&reduced.matrix, &reduced.rhs)?,
        SolveMethod::Cg => {
            let n = reduced.rhs.len();
            cg_solve(&reduced.matrix, &reduced.rhs, 1e-12, 10 * n.max(1))?
        }
    };
    let field = FemField::new(space, reduced.reconstruct(&x))?;
    Ok(PoissonSolution {
        field,
        reduced_rhs: reduced.rhs,
        system,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{DomainSpec, LEFT, RIGHT};

    #[test]
    fn laplace_1d_nodal_values() {
        let mesh = Arc::new(DomainSpec::Interval { a: 0.0, b: 1.0, n: 5 }.build().unwrap());
        for method in [SolveMethod::Lu, SolveMethod::Cg] {
            let p = PoissonProblem::new(Arc::clone(&mesh), FeKind::P1Line)
                .with_source(SpaceTimeFn::constant(-1.0))
                .with_dirichlet(LEFT, SpaceTimeFn::constant(1.0))
                .with_dirichlet(RIGHT, SpaceTimeFn::constant(1.0))
                .with_method(method);
            let s = solve_poisson(&p).unwrap();
            let expected = [1.0, 23.0 / 25.0, 22.0 / 25.0, 22.0 / 25.0, 23.0 / 25.0, 1.0];
            for (u, e) in s.field.coefficients().iter().zip(expected) {
                assert!((u - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neumann_flux_shifts_solution() {
        // -u'' = 0, u(0) = 0, u'(1) = 2  =>  u = 2x
        let mesh = Arc::new(DomainSpec::Interval { a: 0.0, b: 1.0, n: 4 }.build().unwrap());
        let p = PoissonProblem::new(mesh, FeKind::P1Line)
            .with_dirichlet(LEFT, SpaceTimeFn::constant(0.0))
            .with_neumann(RIGHT, SpaceTimeFn::constant(2.0));
        let s = solve_poisson(&p).unwrap();
        for (x, u) in s
            .field
            .space()
            .dofmap()
            .dof_coords()
            .iter()
            .zip(s.field.coefficients())
        {
            assert!((u - 2.0 * x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn p2_reproduces_quadratic() {
        let mesh = Arc::new(
            DomainSpec::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
                nx: 3,
                ny: 2,
            }
            .build()
            .unwrap(),
        );
        let exact = |x: [f64; 2]| x[0] * x[0] + x[0] * x[1];
        let mut p = PoissonProblem::new(mesh, FeKind::P2Tri).with_source(SpaceTimeFn::constant(-2.0));
        for l in 1..=4 {
            p = p.with_dirichlet(l, SpaceTimeFn::steady(exact));
        }
        let s = solve_poisson(&p).unwrap();
        for (x, u) in s
            .field
            .space()
            .dofmap()
            .dof_coords()
            .iter()
            .zip(s.field.coefficients())
        {
            assert!((u - exact(*x)).abs() < 1e-12);
        }
    }
}

//! Taylor-Hood (P2 velocity, P1 pressure) Stokes solver.
//!
//! Unknowns are ordered [u1 | u2 | p]. The system is
//!
//! ```text
//! [ mu K   0     B1^T ]
//! [ 0      mu K  B2^T ]
//! [ B1     B2   -eps M ]
//! ```
//!
//! with K the P2 stiffness, B_c = -int d_c(phi) q and M the P1 mass matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::assembly::{
    assemble_bilinear, assemble_load, element_rule, integrate_field, Coefficient, DirichletReduction, Form,
    LinearSystem, SpaceTimeFn,
};
use crate::elements::{FeKind, FeSpace, FemField};
use crate::error::{FemError, Result};
use crate::linalg::{lu_solve, SolveReport, SparseMatrix};
use crate::mesh::Mesh;
use crate::quadrature::{gauss3_interval, map_to_interval};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StokesProblem {
    pub mesh: Arc<Mesh>,
    pub mu: f64,
    pub force: [SpaceTimeFn; 2],
    /// Velocity (u1, u2) prescribed per label.
    pub dirichlet: BTreeMap<u32, [SpaceTimeFn; 2]>,
    /// Do-nothing (zero traction) labels.
    pub neumann: BTreeSet<u32>,
    pub epsilon: f64,
}

impl StokesProblem {
    /// Zero force, no boundary data yet, default stabilization.
    pub fn new(mesh: Arc<Mesh>, mu: f64) -> Self {
        Self {
            mesh,
            mu,
            force: [SpaceTimeFn::constant(0.0), SpaceTimeFn::constant(0.0)],
            dirichlet: BTreeMap::new(),
            neumann: BTreeSet::new(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_force(mut self, f1: SpaceTimeFn, f2: SpaceTimeFn) -> Self {
        self.force = [f1, f2];
        self
    }

    pub fn with_dirichlet(mut self, label: u32, u1: SpaceTimeFn, u2: SpaceTimeFn) -> Self {
        self.dirichlet.insert(label, [u1, u2]);
        self
    }

    pub fn with_neumann(mut self, label: u32) -> Self {
        self.neumann.insert(label);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let tri = self
            .mesh
            .as_tri()
            .ok_or_else(|| FemError::Unsupported("Stokes needs a triangle mesh".into()))?;
        if !(self.mu > 0.0) {
            return Err(FemError::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(FemError::invalid(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.dirichlet.is_empty() {
            return Err(FemError::invalid("Stokes needs at least one Dirichlet label"));
        }
        let labels = tri.labels();
        for l in self.dirichlet.keys().chain(&self.neumann) {
            if !labels.contains(l) {
                return Err(FemError::UnknownLabel(*l));
            }
        }
        for l in &labels {
            match (self.dirichlet.contains_key(l), self.neumann.contains(l)) {
                (true, true) => {
                    return Err(FemError::invalid(format!(
                        "label {l} is both Dirichlet and Neumann"
                    )))
                }
                (false, false) => {
                    return Err(FemError::invalid(format!("boundary label {l} has no condition")))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Assembled block system and the spaces it lives on.
#[derive(Debug, Clone)]
pub struct StokesSystem {
    pub system: LinearSystem,
    pub velocity_space: Arc<FeSpace>,
    pub pressure_space: Arc<FeSpace>,
}

impl StokesSystem {
    pub fn n_velocity(&self) -> usize {
        self.velocity_space.n_dofs()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_space.n_dofs()
    }
}

pub fn assemble_stokes(problem: &StokesProblem) -> Result<StokesSystem> {
    problem.validate()?;
    let vs = FeSpace::new(Arc::clone(&problem.mesh), FeKind::P2Tri)?;
    let ps = FeSpace::new(Arc::clone(&problem.mesh), FeKind::P1Tri)?;
    let (nv, np) = (vs.n_dofs(), ps.n_dofs());
    let n = 2 * nv + np;

    let k = assemble_bilinear(&vs, &vs, &Form::Stiffness(Coefficient::Constant(1.0)))?;
    let b1 = assemble_bilinear(&ps, &vs, &Form::Divergence { component: 0 })?;
    let b2 = assemble_bilinear(&ps, &vs, &Form::Divergence { component: 1 })?;
    let (b1t, b2t) = (b1.transpose(), b2.transpose());
    let mut blocks = vec![
        (0, 0, &k, problem.mu),
        (nv, nv, &k, problem.mu),
        (2 * nv, 0, &b1, -1.0),
        (2 * nv, nv, &b2, -1.0),
        (0, 2 * nv, &b1t, -1.0),
        (nv, 2 * nv, &b2t, -1.0),
    ];
    let m;
    if problem.epsilon > 0.0 {
        m = assemble_bilinear(&ps, &ps, &Form::Mass(Coefficient::Constant(1.0)))?;
        blocks.push((2 * nv, 2 * nv, &m, -problem.epsilon));
    }
    let matrix = SparseMatrix::from_blocks(n, n, &blocks)?;

    let mut rhs = vec![0.0; n];
    for (c, f) in problem.force.iter().enumerate() {
        if !f.is_zero() {
            let b = assemble_load(&vs, |x| f.eval(x, 0.0));
            rhs[c * nv..(c + 1) * nv].copy_from_slice(&b);
        }
    }
    Ok(StokesSystem {
        system: LinearSystem { matrix, rhs },
        velocity_space: vs,
        pressure_space: ps,
    })
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub velocity: [FemField; 2],
    /// Zero-mean pressure.
    pub pressure: FemField,
    pub report: SolveReport,
    pub divergence: f64,
}

pub fn solve_stokes(problem: &StokesProblem) -> Result<StokesSolution> {
    let assembled = assemble_stokes(problem)?;
    let vs = &assembled.velocity_space;
    let nv = vs.n_dofs();
    let n = assembled.system.rhs.len();

    // Lowest label wins where Dirichlet labels meet.
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    let coords = vs.dofmap().dof_coords();
    for (&label, g) in &problem.dirichlet {
        for d in vs.dofmap().dofs_with_label(label) {
            for (c, gc) in g.iter().enumerate() {
                fixed.entry(c * nv + d).or_insert_with(|| gc.eval(coords[d], 0.0));
            }
        }
    }
    let mut lifting = vec![0.0; n];
    for (&i, &v) in &fixed {
        lifting[i] = v;
    }
    let reduction = DirichletReduction::new(n, fixed.keys().copied());
    let a = reduction.interior_matrix(&assembled.system.matrix);
    let b = reduction.reduced_rhs(&assembled.system.matrix, &assembled.system.rhs, &lifting);
    let (x, report) = lu_solve(&a, &b)?;
    let full = reduction.reconstruct(&x, &lifting);

    let u1 = FemField::new(Arc::clone(vs), full[..nv].to_vec())?;
    let u2 = FemField::new(Arc::clone(vs), full[nv..2 * nv].to_vec())?;
    let mut pressure = FemField::new(Arc::clone(&assembled.pressure_space), full[2 * nv..].to_vec())?;
    let mean = integrate_field(&pressure) / problem.mesh.measure();
    pressure.coefficients_mut().iter_mut().for_each(|p| *p -= mean);
    let divergence = divergence_l2(&u1, &u2)?;
    Ok(StokesSolution {
        velocity: [u1, u2],
        pressure,
        report,
        divergence,
    })
}

fn check_velocity(u1: &FemField, u2: &FemField) -> Result<()> {
    if !Arc::ptr_eq(u1.space(), u2.space()) {
        return Err(FemError::invalid("velocity components live on different spaces"));
    }
    if u1.space().mesh().dim() != 2 {
        return Err(FemError::Unsupported("velocity fields must be 2D".into()));
    }
    Ok(())
}

/// (int (d1 u1 + d2 u2)^2)^(1/2)
pub fn divergence_l2(u1: &FemField, u2: &FemField) -> Result<f64> {
    check_velocity(u1, u2)?;
    let space = u1.space();
    let rule = element_rule(space.mesh());
    let mut total = 0.0;
    for e in 0..space.n_elements() {
        let jac = space.element_map(e).det().abs();
        for (p, w) in rule.iter() {
            let d = u1.eval_gradient(e, p)[0] + u2.eval_gradient(e, p)[1];
            total += w * jac * d * d;
        }
    }
    Ok(total.sqrt())
}

/// int_{Gamma_label} u . n ds with the outward unit normal.
pub fn boundary_flux(u1: &FemField, u2: &FemField, label: u32) -> Result<f64> {
    check_velocity(u1, u2)?;
    let space = u1.space();
    let tri = space.mesh().as_tri().expect("checked 2D");
    if !tri.labels().contains(&label) {
        return Err(FemError::UnknownLabel(label));
    }
    let owners = tri.boundary_owners()?;
    let gauss = map_to_interval(&gauss3_interval(), 0.0, 1.0)?;
    let mut flux = 0.0;
    for (edge, &t) in tri.boundary_edges().iter().zip(&owners) {
        if edge.label != label {
            continue;
        }
        let [a, b] = edge.vertices.map(|v| tri.vertices()[v]);
        let opposite = tri.triangles()[t]
            .iter()
            .find(|v| !edge.vertices.contains(v))
            .map(|&v| tri.vertices()[v])
            .expect("triangle has a vertex off the edge");
        // (dy, -dx) has length |edge|; flip it if it points into the triangle.
        let mut n = [b[1] - a[1], a[0] - b[0]];
        if n[0] * (opposite[0] - a[0]) + n[1] * (opposite[1] - a[1]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        let map = space.element_map(t);
        for (s, w) in gauss.iter() {
            let x = [a[0] + s[0] * (b[0] - a[0]), a[1] + s[0] * (b[1] - a[1])];
            let r = map.inverse(x);
            flux += w * (u1.eval(t, r) * n[0] + u2.eval(t, r) * n[1]);
        }
    }
    Ok(flux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;

    fn unit_square(n: usize) -> Arc<Mesh> {
        Arc::new(
            DomainSpec::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
                nx: n,
                ny: n,
            }
            .build()
            .unwrap(),
        )
    }

    fn all_dirichlet(mesh: Arc<Mesh>, mu: f64, u1: SpaceTimeFn, u2: SpaceTimeFn) -> StokesProblem {
        let mut p = StokesProblem::new(mesh, mu);
        for l in 1..=4 {
            p = p.with_dirichlet(l, u1.clone(), u2.clone());
        }
        p
    }

    #[test]
    fn block_system_shape_and_symmetry() {
        let p = all_dirichlet(
            unit_square(2),
            1.0,
            SpaceTimeFn::constant(0.0),
            SpaceTimeFn::constant(0.0),
        );
        let s = assemble_stokes(&p).unwrap();
        assert_eq!(s.system.matrix.shape(), (59, 59));
        assert_eq!((s.n_velocity(), s.n_pressure()), (25, 9));
        let m = &s.system.matrix;
        assert!(m.max_asymmetry() <= 1e-13 * m.max_abs());

        let s0 = assemble_stokes(&p.clone().with_epsilon(0.0)).unwrap();
        for i in 50..59 {
            for j in 50..59 {
                assert_eq!(s0.system.matrix.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn constant_flow_is_reproduced() {
        let p = all_dirichlet(
            unit_square(3),
            1.0,
            SpaceTimeFn::constant(1.0),
            SpaceTimeFn::constant(0.0),
        );
        let sol = solve_stokes(&p).unwrap();
        assert!(sol.velocity[0]
            .coefficients()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-9));
        assert!(sol.velocity[1].coefficients().iter().all(|v| v.abs() < 1e-9));
        assert!(sol.pressure.coefficients().iter().all(|v| v.abs() < 1e-7));
        let flux = boundary_flux(&sol.velocity[0], &sol.velocity[1], 2).unwrap();
        assert!((flux - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manufactured_polynomial_solution() {
        for mu in [0.1, 1.0] {
            let p = all_dirichlet(
                unit_square(4),
                mu,
                SpaceTimeFn::steady(|x| x[1]),
                SpaceTimeFn::steady(|x| x[0]),
            )
            .with_force(SpaceTimeFn::constant(1.0), SpaceTimeFn::constant(1.0));
            let sol = solve_stokes(&p).unwrap();
            let coords = sol.velocity[0].space().dofmap().dof_coords();
            for (d, x) in coords.iter().enumerate() {
                assert!((sol.velocity[0].coefficients()[d] - x[1]).abs() < 1e-7);
                assert!((sol.velocity[1].coefficients()[d] - x[0]).abs() < 1e-7);
            }
            let pc = sol.pressure.space().dofmap().dof_coords();
            for (d, x) in pc.iter().enumerate() {
                assert!((sol.pressure.coefficients()[d] - (x[0] + x[1] - 1.0)).abs() < 1e-6);
            }
            assert!(sol.divergence < 1e-7);
            assert!(integrate_field(&sol.pressure).abs() < 1e-10);
        }
    }

    #[test]
    fn analytic_divergence_free_field() {
        let vs = FeSpace::new(unit_square(3), FeKind::P2Tri).unwrap();
        let u1 = vs.interpolate(|x| x[0]);
        let u2 = vs.interpolate(|x| -x[1]);
        assert!(divergence_l2(&u1, &u2).unwrap() < 1e-13);
        let total: f64 = (1..=4).map(|l| boundary_flux(&u1, &u2, l).unwrap()).sum();
        assert!(total.abs() < 1e-13);
        assert!(matches!(
            boundary_flux(&u1, &u2, 9),
            Err(FemError::UnknownLabel(9))
        ));
    }

    #[test]
    fn rejects_bad_problems() {
        let mesh = unit_square(2);
        assert!(StokesProblem::new(Arc::clone(&mesh), 1.0)
            .with_neumann(1)
            .with_neumann(2)
            .with_neumann(3)
            .with_neumann(4)
            .validate()
            .is_err());
        let missing = StokesProblem::new(Arc::clone(&mesh), 1.0).with_dirichlet(
            1,
            SpaceTimeFn::constant(0.0),
            SpaceTimeFn::constant(0.0),
        );
        assert!(missing.validate().is_err());
        let negative = all_dirichlet(mesh, -1.0, SpaceTimeFn::constant(0.0), SpaceTimeFn::constant(0.0));
        assert!(negative.validate().is_err());
    }

    /// Stream function sin(x) cos(y): u = (-sin x sin y, -cos x cos y), p = 0.
    #[test]
    fn smooth_dike_solution_divergence_drops_under_refinement() {
        let mu = 0.1;
        let div = |nx, ny| {
            let mesh = Arc::new(DomainSpec::Dike { nx, ny }.build().unwrap());
            let mut p = StokesProblem::new(mesh, mu).with_force(
                SpaceTimeFn::steady(move |x| -2.0 * mu * x[0].sin() * x[1].sin()),
                SpaceTimeFn::steady(move |x| -2.0 * mu * x[0].cos() * x[1].cos()),
            );
            for l in 1..=3 {
                p = p.with_dirichlet(
                    l,
                    SpaceTimeFn::steady(|x| -x[0].sin() * x[1].sin()),
                    SpaceTimeFn::steady(|x| -x[0].cos() * x[1].cos()),
                );
            }
            solve_stokes(&p).unwrap().divergence
        };
        let (coarse, fine) = (div(12, 3), div(24, 6));
        assert!(fine < coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn dike_flux_balance_coarse() {
        let mesh = Arc::new(DomainSpec::Dike { nx: 20, ny: 5 }.build().unwrap());
        let p = StokesProblem::new(mesh, 0.1)
            .with_dirichlet(1, SpaceTimeFn::constant(0.0), SpaceTimeFn::constant(0.0))
            .with_dirichlet(
                2,
                SpaceTimeFn::steady(|x| -1.5 * (x[1] - 1.0) * (x[1] + 1.0)),
                SpaceTimeFn::constant(1.0),
            )
            .with_neumann(3);
        let sol = solve_stokes(&p).unwrap();
        let (u1, u2) = (&sol.velocity[0], &sol.velocity[1]);
        let inflow = boundary_flux(u1, u2, 2).unwrap();
        let outflow = boundary_flux(u1, u2, 3).unwrap();
        assert!(inflow < 0.0);
        assert!(
            (inflow + outflow).abs() <= 1e-3 * inflow.abs(),
            "{inflow} {outflow}"
        );
    }
}

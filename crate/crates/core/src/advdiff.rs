//! Implicit-Euler advection-diffusion.
//!
//! Each step solves (M/dt + A + V) u_m = M u_{m-1} / dt + b(t_m) on the
//! interior dofs, with the Dirichlet data of t_m lifted into the right-hand
//! side. The interior matrix is factored once per step size.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::assembly::{
    assemble_bilinear, assemble_load, Coefficient, DirichletBc, DirichletReduction, Form, SpaceTimeFn,
    VectorCoefficient,
};
use crate::elements::{FeKind, FeSpace, FemField};
use crate::error::{FemError, Result};
use crate::linalg::{dot, lu_solve, relative_residual, LuFactor, SolveReport, SparseMatrix};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct AdvDiffProblem {
    pub mesh: Arc<Mesh>,
    pub kind: FeKind,
    pub mu: f64,
    pub beta: VectorCoefficient,
    pub source: SpaceTimeFn,
    pub dirichlet: DirichletBc,
    /// Zero-flux labels.
    pub neumann: BTreeSet<u32>,
    pub initial: SpaceTimeFn,
    pub dt: f64,
    pub t_final: f64,
}

/// P1 on intervals, P2 on triangles.
pub fn default_kind(mesh: &Mesh) -> FeKind {
    match mesh {
        Mesh::Interval(_) => FeKind::P1Line,
        Mesh::Triangle(_) => FeKind::P2Tri,
    }
}

impl AdvDiffProblem {
    /// Pure diffusion, zero source and initial state, no boundary data yet.
    pub fn new(mesh: Arc<Mesh>, mu: f64, dt: f64, t_final: f64) -> Self {
        Self {
            kind: default_kind(&mesh),
            mesh,
            mu,
            beta: VectorCoefficient::Constant([0.0, 0.0]),
            source: SpaceTimeFn::constant(0.0),
            dirichlet: DirichletBc::new(),
            neumann: BTreeSet::new(),
            initial: SpaceTimeFn::constant(0.0),
            dt,
            t_final,
        }
    }

    pub fn with_beta(mut self, beta: VectorCoefficient) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_source(mut self, f: SpaceTimeFn) -> Self {
        self.source = f;
        self
    }

    pub fn with_dirichlet(mut self, label: u32, g: SpaceTimeFn) -> Self {
        self.dirichlet.values.insert(label, g);
        self
    }

    pub fn with_neumann(mut self, label: u32) -> Self {
        self.neumann.insert(label);
        self
    }

    pub fn with_initial(mut self, u0: SpaceTimeFn) -> Self {
        self.initial = u0;
        self
    }

    pub fn with_kind(mut self, kind: FeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(FemError::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.dt > 0.0) {
            return Err(FemError::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(FemError::invalid(format!(
                "final time {} is shorter than one step {}",
                self.t_final, self.dt
            )));
        }
        if self.kind.dim() != self.mesh.dim() {
            return Err(FemError::invalid(format!(
                "{:?} elements on a {}D mesh",
                self.kind,
                self.mesh.dim()
            )));
        }
        let labels = self.mesh.labels();
        for l in self.dirichlet.values.keys().chain(&self.neumann) {
            if !labels.contains(l) {
                return Err(FemError::UnknownLabel(*l));
            }
            if self.dirichlet.values.contains_key(l) && self.neumann.contains(l) {
                return Err(FemError::invalid(format!(
                    "label {l} is both Dirichlet and Neumann"
                )));
            }
        }
        Ok(())
    }

    /// Times t_1 < ... < t_n = T; all steps are dt except possibly a shorter last one.
    pub fn step_times(&self) -> Vec<f64> {
        let n = (self.t_final / self.dt + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (1..=n).map(|k| k as f64 * self.dt).collect();
        if self.t_final - n as f64 * self.dt > 1e-9 * self.dt {
            times.push(self.t_final);
        } else if let Some(last) = times.last_mut() {
            *last = self.t_final;
        }
        times
    }
}

/// Spaces and time-independent matrices shared by the stepper and the
/// steady solver.
#[derive(Debug, Clone)]
struct Operators {
    space: Arc<FeSpace>,
    mass: SparseMatrix,
    /// A + V
    transport: SparseMatrix,
    reduction: DirichletReduction,
}

impl Operators {
    fn new(problem: &AdvDiffProblem) -> Result<Self> {
        problem.validate()?;
        let space = FeSpace::new(Arc::clone(&problem.mesh), problem.kind)?;
        let mass = assemble_bilinear(&space, &space, &Form::Mass(Coefficient::Constant(1.0)))?;
        let mut transport = assemble_bilinear(
            &space,
            &space,
            &Form::Stiffness(Coefficient::Constant(problem.mu)),
        )?;
        if !problem.beta.is_zero() {
            let v = assemble_bilinear(&space, &space, &Form::Convection(problem.beta.clone()))?;
            transport = transport.linear_combination(1.0, &v, 1.0)?;
        }
        let fixed = problem.dirichlet.constrained_dofs(space.dofmap())?;
        let reduction = DirichletReduction::new(space.n_dofs(), fixed.keys().copied());
        Ok(Self {
            space,
            mass,
            transport,
            reduction,
        })
    }

    fn load(&self, problem: &AdvDiffProblem, t: f64) -> Vec<f64> {
        if problem.source.is_zero() {
            vec![0.0; self.space.n_dofs()]
        } else {
            assemble_load(&self.space, |x| problem.source.eval(x, t))
        }
    }
}

/// Time-stepping state: factored interior matrix and current time.
#[derive(Debug, Clone)]
pub struct Stepper {
    problem: AdvDiffProblem,
    ops: Operators,
    system: SparseMatrix,
    factor: LuFactor,
    dt: f64,
    time: f64,
    steps: usize,
    factorizations: usize,
}

pub fn build_stepper(problem: &AdvDiffProblem) -> Result<Stepper> {
    let ops = Operators::new(problem)?;
    let (system, factor) = factor_for(&ops, problem.dt)?;
    Ok(Stepper {
        problem: problem.clone(),
        ops,
        system,
        factor,
        dt: problem.dt,
        time: 0.0,
        steps: 0,
        factorizations: 1,
    })
}

fn factor_for(ops: &Operators, dt: f64) -> Result<(SparseMatrix, LuFactor)> {
    let system = ops.mass.linear_combination(1.0 / dt, &ops.transport, 1.0)?;
    let factor = LuFactor::new(&ops.reduction.interior_matrix(&system))?;
    Ok((system, factor))
}

impl Stepper {
    pub fn space(&self) -> &Arc<FeSpace> {
        &self.ops.space
    }

    pub fn problem(&self) -> &AdvDiffProblem {
        &self.problem
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.ops.mass
    }

    /// Full matrix M/dt + A + V for the current step size.
    pub fn system_matrix(&self) -> &SparseMatrix {
        &self.system
    }

    pub fn n_interior(&self) -> usize {
        self.ops.reduction.interior().len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// The initial condition interpolated onto the space.
    pub fn initial_state(&self) -> Vec<f64> {
        let u0 = &self.problem.initial;
        self.ops
            .space
            .dofmap()
            .dof_coords()
            .iter()
            .map(|&x| u0.eval(x, 0.0))
            .collect()
    }

    /// Advance from the current time to `t_next`.
    pub fn step(&mut self, u_prev: &[f64], t_next: f64) -> Result<Vec<f64>> {
        let n = self.ops.space.n_dofs();
        if u_prev.len() != n {
            return Err(FemError::DimensionMismatch(format!(
                "state has {} entries, space has {n} dofs",
                u_prev.len()
            )));
        }
        let dt = t_next - self.time;
        if !(dt > 0.0) {
            return Err(FemError::invalid(format!(
                "step to {t_next} does not advance from {}",
                self.time
            )));
        }
        if (dt - self.dt).abs() > 1e-12 * self.dt {
            let (system, factor) = factor_for(&self.ops, dt)?;
            self.system = system;
            self.factor = factor;
            self.dt = dt;
            self.factorizations += 1;
        }
        let mut rhs = self.ops.load(&self.problem, t_next);
        let mu = self.ops.mass.spmv(u_prev);
        for (r, m) in rhs.iter_mut().zip(&mu) {
            *r += m / dt;
        }
        let lifting = self.problem.dirichlet.lifting(self.ops.space.dofmap(), t_next)?;
        let b = self.ops.reduction.reduced_rhs(&self.system, &rhs, &lifting);
        let x = self.factor.solve(&b)?;
        self.time = t_next;
        self.steps += 1;
        Ok(self.ops.reduction.reconstruct(&x, &lifting))
    }
}

/// Outcome of a time loop.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub state: FemField,
    pub steps: usize,
    pub t_final: f64,
    pub factorizations: usize,
}

/// Step from t = 0 to T. `sink(step, t, field)` is called every
/// `output_every` steps and after the final one.
pub fn run(
    problem: &AdvDiffProblem,
    output_every: usize,
    mut sink: impl FnMut(usize, f64, &FemField) -> Result<()>,
) -> Result<RunSummary> {
    if output_every == 0 {
        return Err(FemError::invalid("output_every must be at least 1"));
    }
    let mut stepper = build_stepper(problem)?;
    let times = problem.step_times();
    let mut field = FemField::new(Arc::clone(stepper.space()), stepper.initial_state())?;
    for (k, &t) in times.iter().enumerate() {
        let next = stepper.step(field.coefficients(), t)?;
        field = FemField::new(Arc::clone(stepper.space()), next)?;
        let step = k + 1;
        if step % output_every == 0 || step == times.len() {
            sink(step, t, &field)?;
        }
    }
    Ok(RunSummary {
        state: field,
        steps: stepper.steps(),
        t_final: stepper.time(),
        factorizations: stepper.factorizations(),
    })
}

/// Solve (A + V) u = b with sources and boundary data taken at t = T.
pub fn steady_solve(problem: &AdvDiffProblem) -> Result<(FemField, SolveReport)> {
    let ops = Operators::new(problem)?;
    let t = problem.t_final;
    let lifting = problem.dirichlet.lifting(ops.space.dofmap(), t)?;
    let rhs = ops.load(problem, t);
    let a = ops.reduction.interior_matrix(&ops.transport);
    let b = ops.reduction.reduced_rhs(&ops.transport, &rhs, &lifting);
    let (x, report) = lu_solve(&a, &b)?;
    debug_assert!(relative_residual(&a, &x, &b) <= 1e-8 || b.is_empty());
    let u = ops.reduction.reconstruct(&x, &lifting);
    Ok((FemField::new(ops.space, u)?, report))
}

/// sqrt(u^T M u)
pub fn mass_norm(mass: &SparseMatrix, u: &[f64]) -> f64 {
    dot(u, &mass.spmv(u)).max(0.0).sqrt()
}

//! Config -> problem -> solve -> files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{BoundarySpec, ProblemConfig, ProblemKind};
use super::convergence::convergence_study;
use super::expr::Expr;
use super::output::{field_csv, vtk_string, VtkData};
use crate::advdiff::{default_kind, run, AdvDiffProblem};
use crate::assembly::{SpaceTimeFn, VectorCoefficient};
use crate::coupling::{parabolic_inflow, run_coupled, CoupledProblem};
use crate::elements::FemField;
use crate::error::{FemError, Result};
use crate::mesh::Mesh;
use crate::poisson::{solve_poisson, PoissonProblem};
use crate::stokes::{solve_stokes, StokesProblem, StokesSolution, DEFAULT_EPSILON};

fn expr_fn(config: &ProblemConfig, key: &str) -> SpaceTimeFn {
    config
        .expr(key)
        .map_or_else(|| SpaceTimeFn::constant(0.0), Expr::to_fn)
}

fn check_label(mesh: &Mesh, label: u32) -> Result<()> {
    if mesh.labels().contains(&label) {
        Ok(())
    } else {
        Err(FemError::UnknownLabel(label))
    }
}

fn scalar_value(label: u32, values: &[Expr]) -> Result<SpaceTimeFn> {
    match values {
        [v] => Ok(v.to_fn()),
        _ => Err(FemError::invalid(format!(
            "label {label}: expected one Dirichlet value, got {}",
            values.len()
        ))),
    }
}

pub fn poisson_problem(config: &ProblemConfig, mesh: Arc<Mesh>) -> Result<PoissonProblem> {
    let kind = config.space.unwrap_or_else(|| default_kind(&mesh));
    let kappa = config.constant("kappa", config.constant("mu", 1.0)?)?;
    let mut p = PoissonProblem::new(Arc::clone(&mesh), kind)
        .with_kappa(kappa)
        .with_source(expr_fn(config, "f"));
    if let Some(m) = config.solver {
        p = p.with_method(m);
    }
    for (&label, spec) in &config.boundary {
        check_label(&mesh, label)?;
        p = match spec {
            BoundarySpec::Dirichlet(v) => p.with_dirichlet(label, scalar_value(label, v)?),
            BoundarySpec::Neumann(Some(h)) => p.with_neumann(label, h.to_fn()),
            BoundarySpec::Neumann(None) => p,
        };
    }
    Ok(p)
}

pub fn stokes_problem(
    config: &ProblemConfig,
    mesh: Arc<Mesh>,
    table: &BTreeMap<u32, BoundarySpec>,
    mu_key: &str,
) -> Result<StokesProblem> {
    let mut p = StokesProblem::new(Arc::clone(&mesh), config.constant(mu_key, 1.0)?)
        .with_force(expr_fn(config, "fx"), expr_fn(config, "fy"))
        .with_epsilon(config.constant("epsilon", DEFAULT_EPSILON)?);
    for (&label, spec) in table {
        check_label(&mesh, label)?;
        p = match spec {
            BoundarySpec::Dirichlet(v) if v.len() == 2 => p.with_dirichlet(label, v[0].to_fn(), v[1].to_fn()),
            BoundarySpec::Dirichlet(v) => {
                return Err(FemError::invalid(format!(
                    "label {label}: velocity needs two Dirichlet values, got {}",
                    v.len()
                )))
            }
            BoundarySpec::Neumann(None) => p.with_neumann(label),
            BoundarySpec::Neumann(Some(_)) => {
                return Err(FemError::Unsupported(format!(
                    "label {label}: only zero-traction Neumann conditions are supported for Stokes"
                )))
            }
        };
    }
    Ok(p)
}

fn beta(config: &ProblemConfig) -> Result<VectorCoefficient> {
    let bx = config.expr("beta_x").cloned().unwrap_or(Expr::Num(0.0));
    let by = config.expr("beta_y").cloned().unwrap_or(Expr::Num(0.0));
    if bx.is_time_dependent() || by.is_time_dependent() {
        return Err(FemError::Unsupported("time-dependent advection fields".into()));
    }
    Ok(match (bx.constant_value(), by.constant_value()) {
        (Some(a), Some(b)) => VectorCoefficient::Constant([a, b]),
        _ => VectorCoefficient::function(move |x| [bx.eval(x[0], x[1], 0.0), by.eval(x[0], x[1], 0.0)]),
    })
}

fn transport_table(
    mut p: AdvDiffProblem,
    mesh: &Mesh,
    table: &BTreeMap<u32, BoundarySpec>,
) -> Result<AdvDiffProblem> {
    for (&label, spec) in table {
        check_label(mesh, label)?;
        p = match spec {
            BoundarySpec::Dirichlet(v) => p.with_dirichlet(label, scalar_value(label, v)?),
            BoundarySpec::Neumann(None) => p.with_neumann(label),
            BoundarySpec::Neumann(Some(_)) => {
                return Err(FemError::Unsupported(format!(
                    "label {label}: only zero-flux Neumann conditions are supported for transport"
                )))
            }
        };
    }
    Ok(p)
}

pub fn advdiff_problem(config: &ProblemConfig, mesh: Arc<Mesh>) -> Result<AdvDiffProblem> {
    let (dt, t_final) = config.time.map_or((1.0, 1.0), |t| (t.dt, t.t_final));
    let mut p = AdvDiffProblem::new(Arc::clone(&mesh), config.constant("mu", 1.0)?, dt, t_final)
        .with_beta(beta(config)?)
        .with_source(expr_fn(config, "f"))
        .with_initial(expr_fn(config, "u0"));
    if let Some(k) = config.space {
        p = p.with_kind(k);
    }
    transport_table(p, &mesh, &config.boundary)
}

pub fn coupled_problem(config: &ProblemConfig, mesh: Arc<Mesh>) -> Result<CoupledProblem> {
    let time = config
        .time
        .ok_or_else(|| FemError::invalid("coupled problems need a [time] section"))?;
    let gate_label = config
        .gate_label
        .ok_or_else(|| FemError::invalid("coupled problems need coupling.gate_label"))?;
    let stokes = stokes_problem(config, Arc::clone(&mesh), &config.stokes_boundary, "mu_stokes")?;
    let mut table = config.boundary.clone();
    // The gated label's own value, if given, replaces the default inflow profile.
    let inflow = match table.remove(&gate_label) {
        Some(BoundarySpec::Dirichlet(v)) => scalar_value(gate_label, &v)?,
        Some(BoundarySpec::Neumann(_)) => {
            return Err(FemError::invalid(format!(
                "gate label {gate_label} must carry Dirichlet data"
            )))
        }
        None => parabolic_inflow(),
    };
    let mut transport = AdvDiffProblem::new(
        Arc::clone(&mesh),
        config.constant("mu", 1.0)?,
        time.dt,
        time.t_final,
    )
    .with_source(expr_fn(config, "f"))
    .with_initial(expr_fn(config, "u0"));
    if let Some(k) = config.space {
        transport = transport.with_kind(k);
    }
    let transport = transport_table(transport, &mesh, &table)?;
    let mut coupled = CoupledProblem::new(
        stokes,
        transport,
        gate_label,
        time.t_gate.unwrap_or(f64::INFINITY),
    );
    coupled.inflow = inflow;
    Ok(coupled)
}

/// Files written and human-readable notes from one config run.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

struct Writer<'a> {
    config: &'a ProblemConfig,
    dir: &'a Path,
    report: RunReport,
}

impl Writer<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.config.output.prefix))
    }

    fn write(&mut self, suffix: &str, text: &str) -> Result<()> {
        let path = self.path(suffix);
        std::fs::write(&path, text).map_err(|e| FemError::io(&path, e))?;
        self.report.files.push(path);
        Ok(())
    }

    fn scalar(&mut self, tag: &str, field: &FemField) -> Result<()> {
        if self.config.output.format.csv() {
            self.write(&format!("{tag}.csv"), &field_csv(field))?;
        }
        if self.config.output.format.vtk() {
            let text = vtk_string(field.space().mesh(), &[VtkData::Scalars("u", field)])?;
            self.write(&format!("{tag}.vtk"), &text)?;
        }
        Ok(())
    }

    fn stokes(&mut self, tag: &str, sol: &StokesSolution) -> Result<()> {
        let [u1, u2] = &sol.velocity;
        if self.config.output.format.csv() {
            self.write(&format!("{tag}_u1.csv"), &field_csv(u1))?;
            self.write(&format!("{tag}_u2.csv"), &field_csv(u2))?;
            self.write(&format!("{tag}_p.csv"), &field_csv(&sol.pressure))?;
        }
        if self.config.output.format.vtk() {
            let text = vtk_string(
                u1.space().mesh(),
                &[
                    VtkData::Vectors("velocity", u1, u2),
                    VtkData::Scalars("pressure", &sol.pressure),
                ],
            )?;
            self.write(&format!("{tag}.vtk"), &text)?;
        }
        self.report.notes.push(format!(
            "stokes: {} unknowns, residual {:.3e}, divergence L2 {:.3e}",
            sol.report.unknowns, sol.report.residual, sol.divergence
        ));
        Ok(())
    }
}

/// Solve the configured problem, writing outputs under `out_dir`.
pub fn run_config(config: &ProblemConfig, out_dir: impl AsRef<Path>) -> Result<RunReport> {
    let dir = out_dir.as_ref();
    let mut w = Writer {
        config,
        dir,
        report: RunReport::default(),
    };
    if config.kind == ProblemKind::Convergence {
        let levels = config.convergence.map_or(4, |c| c.levels);
        let table = convergence_study(config, levels)?;
        w.write("_rates.csv", &table.to_csv())?;
        w.report.notes.push(format!(
            "convergence: L2 slope {:.3}, max-error slope {:.3}",
            table.l2_slope, table.max_slope
        ));
        return Ok(w.report);
    }
    let mesh = Arc::new(config.domain.build()?);
    match config.kind {
        ProblemKind::Poisson1d | ProblemKind::Poisson2d => {
            let sol = solve_poisson(&poisson_problem(config, mesh)?)?;
            w.scalar("", &sol.field)?;
        }
        ProblemKind::Stokes => {
            let sol = solve_stokes(&stokes_problem(config, mesh, &config.boundary, "mu")?)?;
            w.stokes("", &sol)?;
        }
        ProblemKind::AdvDiff1d | ProblemKind::AdvDiff2d => {
            let problem = advdiff_problem(config, mesh)?;
            let every = config.time.map_or(1, |t| t.output_every);
            let summary = run(&problem, every, |step, _, u| w.scalar(&format!("_{step:06}"), u))?;
            w.report.notes.push(format!(
                "advdiff: {} steps to t = {}",
                summary.steps, summary.t_final
            ));
        }
        ProblemKind::Coupled => {
            let problem = coupled_problem(config, mesh)?;
            let every = config.time.map_or(1, |t| t.output_every);
            let mut snapshots = Vec::new();
            let summary = run_coupled(&problem, every, |step, _, u| {
                snapshots.push((step, u.clone()));
                Ok(())
            })?;
            w.stokes("_stokes", &summary.stokes)?;
            for (step, u) in &snapshots {
                w.scalar(&format!("_{step:06}"), u)?;
            }
            w.report.notes.push(format!(
                "coupled: {} steps to t = {}",
                summary.transport.steps, summary.transport.t_final
            ));
        }
        ProblemKind::Convergence => unreachable!("handled above"),
    }
    Ok(w.report)
}

//! Error-versus-h studies on uniformly refined meshes.

use std::fmt::Write as _;
use std::sync::Arc;

use super::config::{ProblemConfig, ProblemKind};
use super::driver::{advdiff_problem, poisson_problem, stokes_problem};
use crate::advdiff::steady_solve;
use crate::assembly::l2_error;
use crate::elements::FemField;
use crate::error::{FemError, Result};
use crate::poisson::solve_poisson;
use crate::stokes::solve_stokes;

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub dofs: usize,
    pub l2: f64,
    pub max_nodal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub l2_slope: f64,
    pub max_slope: f64,
}

impl RateTable {
    pub fn from_rows(rows: Vec<RateRow>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(FemError::invalid(format!(
                "need >= 3 levels for a fitted slope, got {}",
                rows.len()
            )));
        }
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
        let mx: Vec<f64> = rows.iter().map(|r| r.max_nodal).collect();
        Ok(Self {
            l2_slope: loglog_slope(&h, &l2),
            max_slope: loglog_slope(&h, &mx),
            rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dofs,l2_error,max_error\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{},{}", r.h, r.dofs, r.l2, r.max_nodal);
        }
        s
    }
}

/// Least-squares slope of log(e) against log(h).
pub fn loglog_slope(h: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn nodal_error(u: &FemField, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    u.space()
        .dofmap()
        .dof_coords()
        .iter()
        .zip(u.coefficients())
        .map(|(x, v)| (v - exact(*x)).abs())
        .fold(0.0, f64::max)
}

/// Solve on `levels` meshes, halving h each time, and fit rates.
pub fn convergence_study(config: &ProblemConfig, levels: usize) -> Result<RateTable> {
    if levels < 3 {
        return Err(FemError::invalid(format!("need >= 3 levels, got {levels}")));
    }
    let target = config.target();
    let exact_key = if target == ProblemKind::Stokes { "u1" } else { "u" };
    let exact = config.exact.get(exact_key).ok_or_else(|| {
        FemError::Unsupported(format!("no exact solution `{exact_key}` registered for {target}"))
    })?;
    let u_exact = |x: [f64; 2]| exact.eval(x[0], x[1], 0.0);
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let domain = config.domain.refined(1 << level);
        let mesh = Arc::new(domain.build()?);
        let h = mesh.h()?;
        let row = match target {
            ProblemKind::Poisson1d | ProblemKind::Poisson2d => {
                let sol = solve_poisson(&poisson_problem(config, Arc::clone(&mesh))?)?;
                RateRow {
                    h,
                    dofs: sol.field.space().n_dofs(),
                    l2: l2_error(&sol.field, u_exact),
                    max_nodal: nodal_error(&sol.field, u_exact),
                }
            }
            ProblemKind::AdvDiff1d => {
                let (u, _) = steady_solve(&advdiff_problem(config, Arc::clone(&mesh))?)?;
                RateRow {
                    h,
                    dofs: u.space().n_dofs(),
                    l2: l2_error(&u, u_exact),
                    max_nodal: nodal_error(&u, u_exact),
                }
            }
            ProblemKind::Stokes => {
                let e2 = config.exact.get("u2").ok_or_else(|| {
                    FemError::Unsupported("no exact solution `u2` registered for stokes".into())
                })?;
                let v_exact = |x: [f64; 2]| e2.eval(x[0], x[1], 0.0);
                let sol = solve_stokes(&stokes_problem(
                    config,
                    Arc::clone(&mesh),
                    &config.boundary,
                    "mu",
                )?)?;
                let [u1, u2] = &sol.velocity;
                RateRow {
                    h,
                    dofs: 2 * u1.space().n_dofs() + sol.pressure.space().n_dofs(),
                    l2: l2_error(u1, u_exact).hypot(l2_error(u2, v_exact)),
                    max_nodal: nodal_error(u1, u_exact).max(nodal_error(u2, v_exact)),
                }
            }
            other => return Err(FemError::Unsupported(format!("{other} has no convergence study"))),
        };
        rows.push(row);
    }
    RateTable::from_rows(rows)
}

//! Stokes velocity as the advection field of a transport run.

use std::sync::Arc;

use crate::advdiff::{run, AdvDiffProblem, RunSummary};
use crate::assembly::{SpaceTimeFn, VectorCoefficient};
use crate::elements::FemField;
use crate::error::{FemError, Result};
use crate::stokes::{solve_stokes, StokesProblem, StokesSolution};

/// Parabolic inflow profile g = -(y - 1)(y + 1).
pub fn parabolic_inflow() -> SpaceTimeFn {
    SpaceTimeFn::steady(|x| -(x[1] - 1.0) * (x[1] + 1.0))
}

#[derive(Debug, Clone)]
pub struct CoupledProblem {
    pub stokes: StokesProblem,
    /// Transport template; its beta is replaced by the Stokes velocity.
    pub transport: AdvDiffProblem,
    /// Label whose Dirichlet data is switched off after `t_gate`.
    pub gate_label: u32,
    pub t_gate: f64,
    pub inflow: SpaceTimeFn,
}

impl CoupledProblem {
    pub fn new(stokes: StokesProblem, transport: AdvDiffProblem, gate_label: u32, t_gate: f64) -> Self {
        Self {
            stokes,
            transport,
            gate_label,
            t_gate,
            inflow: parabolic_inflow(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !Arc::ptr_eq(&self.stokes.mesh, &self.transport.mesh) && *self.stokes.mesh != *self.transport.mesh
        {
            return Err(FemError::invalid(
                "Stokes and transport problems use different meshes",
            ));
        }
        if !self.stokes.mesh.labels().contains(&self.gate_label) {
            return Err(FemError::UnknownLabel(self.gate_label));
        }
        self.stokes.validate()?;
        self.transport.validate()
    }

    /// The transport problem with beta bound to `velocity` and the gated inflow.
    pub fn bind(&self, velocity: &[FemField; 2]) -> AdvDiffProblem {
        let [u1, u2] = velocity.clone();
        let (g, gate) = (self.inflow.clone(), self.t_gate);
        self.transport
            .clone()
            .with_beta(VectorCoefficient::Fields(u1, u2))
            .with_dirichlet(
                self.gate_label,
                SpaceTimeFn::new(move |x, t| if t <= gate { g.eval(x, t) } else { 0.0 }),
            )
    }
}

#[derive(Debug, Clone)]
pub struct CoupledSummary {
    pub stokes: StokesSolution,
    pub transport: RunSummary,
}

/// Solve Stokes once, then run the transport loop with the velocity as beta.
pub fn run_coupled(
    problem: &CoupledProblem,
    output_every: usize,
    sink: impl FnMut(usize, f64, &FemField) -> Result<()>,
) -> Result<CoupledSummary> {
    problem.validate()?;
    let stokes = solve_stokes(&problem.stokes)?;
    let transport = problem.bind(&stokes.velocity);
    let summary = run(&transport, output_every, sink)?;
    Ok(CoupledSummary {
        stokes,
        transport: summary,
    })
}

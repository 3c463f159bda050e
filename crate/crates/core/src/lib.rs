//! Finite elements on intervals and triangles: P1/P2 Lagrange spaces,
//! Poisson, Taylor-Hood Stokes, implicit-Euler advection-diffusion and the
//! Stokes-to-transport coupling, with a small config-driven CLI.

pub mod advdiff;
pub mod assembly;
pub mod cli;
pub mod coupling;
pub mod elements;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod poisson;
pub mod quadrature;
pub mod stokes;

pub use error::{FemError, Result};

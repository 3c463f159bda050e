//! Config files, expressions, field output, convergence studies and the
//! driver behind the command line.

pub mod config;
pub mod convergence;
pub mod driver;
pub mod expr;
pub mod output;

pub use config::{parse_config, parse_config_str, serialize_config, ProblemConfig, ProblemKind};
pub use convergence::{convergence_study, RateTable};
pub use driver::{run_config, RunReport};
pub use expr::Expr;
pub use output::{field_csv, write_field_csv, write_vtk, VtkData};

//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 numerical failure (including non-conforming meshes).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{FemError, Result};
use crate::io::{convergence_study, parse_config, run_config, ProblemKind};
use crate::mesh::io::read_mesh_unchecked;
use crate::mesh::{mesh_metrics, validate_conformity, write_mesh, DomainSpec, Mesh};

#[derive(Debug, Parser)]
#[command(
    name = "femkit",
    version,
    about = "P1/P2 finite elements: Poisson, Stokes, advection-diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a structured mesh, e.g. `rectangle(0,1,0,1,8,8)` or `dike(45,10)`.
    Mesh {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve the problem described by a config file.
    Solve {
        config: PathBuf,
        /// Directory for output files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Measure error rates under uniform refinement.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check a mesh file for conformity.
    Validate { mesh: PathBuf },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

fn exit_code(e: &FemError) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Mesh { spec, output } => mesh_cmd(&spec, &output),
        Command::Solve { config, out_dir } => solve_cmd(&config, &out_dir),
        Command::Convergence {
            config,
            levels,
            out_dir,
        } => convergence_cmd(&config, levels, &out_dir),
        Command::Validate { mesh } => validate_cmd(&mesh),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn mesh_cmd(spec: &str, output: &PathBuf) -> Result<i32> {
    let spec: DomainSpec = spec.parse()?;
    match spec.build()? {
        Mesh::Triangle(m) => {
            write_mesh(&m, output)?;
            eprintln!(
                "wrote {} ({} vertices, {} triangles)",
                output.display(),
                m.n_vertices(),
                m.n_triangles()
            );
            Ok(EXIT_OK)
        }
        Mesh::Interval(_) => Err(FemError::Unsupported(
            "mesh files hold triangulations; interval meshes are built from configs".into(),
        )),
    }
}

fn solve_cmd(config: &PathBuf, out_dir: &PathBuf) -> Result<i32> {
    let cfg = parse_config(config)?;
    let report = run_config(&cfg, out_dir)?;
    for note in &report.notes {
        eprintln!("{note}");
    }
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(EXIT_OK)
}

fn convergence_cmd(config: &PathBuf, levels: Option<usize>, out_dir: &PathBuf) -> Result<i32> {
    let cfg = parse_config(config)?;
    let levels = levels.or(cfg.convergence.map(|c| c.levels)).unwrap_or(4);
    if cfg.kind != ProblemKind::Convergence && cfg.exact.is_empty() {
        return Err(FemError::Unsupported(format!(
            "{} has no [exact] solution to measure against",
            cfg.kind
        )));
    }
    let table = convergence_study(&cfg, levels)?;
    let path = out_dir.join(format!("{}_rates.csv", cfg.output.prefix));
    std::fs::write(&path, table.to_csv()).map_err(|e| FemError::io(&path, e))?;
    eprint!("{}", table.to_csv());
    eprintln!(
        "L2 slope {:.3}, max-error slope {:.3}",
        table.l2_slope, table.max_slope
    );
    eprintln!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn validate_cmd(path: &PathBuf) -> Result<i32> {
    let mesh = read_mesh_unchecked(path)?;
    let report = validate_conformity(&mesh);
    eprint!("{report}");
    if !report.passed() {
        return Ok(EXIT_NUMERICAL);
    }
    let m = mesh_metrics(&mesh)?;
    eprintln!(
        "h = {:.6}, max aspect = {:.3}, quasi-uniformity = {:.3}",
        m.h, m.max_aspect, m.quasi_uniformity
    );
    Ok(EXIT_OK)
}

//! Sectioned key-value problem description.
//!
//! ```text
//! # comment
//! [problem]
//! kind = poisson1d
//! [domain]
//! shape = interval(0, 1, 5)
//! [coefficients]
//! f = -1
//! [boundary]
//! 1 = dirichlet 1
//! 2 = dirichlet 1
//! [output]
//! prefix = laplace1d
//! ```
//!
//! See `docs/config-grammar.txt` for the full key list.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::expr::Expr;
use crate::elements::FeKind;
use crate::error::{FemError, Result};
use crate::linalg::SolveMethod;
use crate::mesh::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Poisson1d,
    Poisson2d,
    Stokes,
    AdvDiff1d,
    AdvDiff2d,
    Coupled,
    Convergence,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Poisson1d => "poisson1d",
            ProblemKind::Poisson2d => "poisson2d",
            ProblemKind::Stokes => "stokes",
            ProblemKind::AdvDiff1d => "advdiff1d",
            ProblemKind::AdvDiff2d => "advdiff2d",
            ProblemKind::Coupled => "coupled",
            ProblemKind::Convergence => "convergence",
        }
    }

    fn is_1d(self) -> bool {
        matches!(self, ProblemKind::Poisson1d | ProblemKind::AdvDiff1d)
    }

    fn is_transient(self) -> bool {
        matches!(
            self,
            ProblemKind::AdvDiff1d | ProblemKind::AdvDiff2d | ProblemKind::Coupled
        )
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "poisson1d" => ProblemKind::Poisson1d,
            "poisson2d" => ProblemKind::Poisson2d,
            "stokes" => ProblemKind::Stokes,
            "advdiff1d" => ProblemKind::AdvDiff1d,
            "advdiff2d" => ProblemKind::AdvDiff2d,
            "coupled" => ProblemKind::Coupled,
            "convergence" => ProblemKind::Convergence,
            _ => return Err(FemError::invalid(format!("unknown problem kind `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// One expression for scalar problems, two for velocities.
    Dirichlet(Vec<Expr>),
    /// Natural condition, optionally with flux data.
    Neumann(Option<Expr>),
}

impl fmt::Display for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySpec::Dirichlet(values) => {
                f.write_str("dirichlet ")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            BoundarySpec::Neumann(None) => f.write_str("neumann"),
            BoundarySpec::Neumann(Some(h)) => write!(f, "neumann {h}"),
        }
    }
}

impl FromStr for BoundarySpec {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (word, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let rest = rest.trim();
        match word {
            "dirichlet" if !rest.is_empty() => Ok(BoundarySpec::Dirichlet(
                rest.split(';').map(Expr::parse).collect::<Result<_>>()?,
            )),
            "dirichlet" => Err(FemError::invalid("dirichlet needs a value")),
            "neumann" if rest.is_empty() => Ok(BoundarySpec::Neumann(None)),
            "neumann" => Ok(BoundarySpec::Neumann(Some(Expr::parse(rest)?))),
            _ => Err(FemError::invalid(format!(
                "expected `dirichlet <value>` or `neumann [value]`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub t_gate: Option<f64>,
    pub output_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn vtk(self) -> bool {
        matches!(self, OutputFormat::Vtk | OutputFormat::Both)
    }

    fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Vtk => "vtk",
            OutputFormat::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub prefix: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConfig {
    pub target: ProblemKind,
    pub levels: usize,
}

pub const COEFFICIENT_KEYS: [&str; 10] = [
    "mu",
    "mu_stokes",
    "kappa",
    "beta_x",
    "beta_y",
    "epsilon",
    "f",
    "fx",
    "fy",
    "u0",
];
pub const EXACT_KEYS: [&str; 4] = ["u", "u1", "u2", "p"];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub space: Option<FeKind>,
    pub solver: Option<SolveMethod>,
    pub domain: DomainSpec,
    /// Keys from [`COEFFICIENT_KEYS`].
    pub coefficients: BTreeMap<String, Expr>,
    pub boundary: BTreeMap<u32, BoundarySpec>,
    /// Velocity conditions of a coupled run.
    pub stokes_boundary: BTreeMap<u32, BoundarySpec>,
    pub time: Option<TimeConfig>,
    pub gate_label: Option<u32>,
    pub output: OutputConfig,
    /// Keys from [`EXACT_KEYS`].
    pub exact: BTreeMap<String, Expr>,
    pub convergence: Option<ConvergenceConfig>,
}

impl ProblemConfig {
    /// Constant coefficient, or `default` if absent.
    pub fn constant(&self, key: &str, default: f64) -> Result<f64> {
        match self.coefficients.get(key) {
            None => Ok(default),
            Some(e) => e.constant_value().ok_or_else(|| FemError::Config {
                line: 0,
                key: format!("coefficients.{key}"),
                message: "must be a constant".into(),
            }),
        }
    }

    pub fn expr(&self, key: &str) -> Option<&Expr> {
        self.coefficients.get(key)
    }

    /// The problem the convergence harness or solver actually runs.
    pub fn target(&self) -> ProblemKind {
        match (self.kind, self.convergence) {
            (ProblemKind::Convergence, Some(c)) => c.target,
            (k, _) => k,
        }
    }
}

fn space_name(k: FeKind) -> &'static str {
    match k {
        FeKind::P2Tri => "p2",
        _ => "p1",
    }
}

fn config_err(line: usize, key: impl Into<String>, message: impl Into<String>) -> FemError {
    FemError::Config {
        line,
        key: key.into(),
        message: message.into(),
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ProblemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| FemError::io(path, e))?;
    parse_config_str(&text)
}

/// Raw entries: section.key -> (line, value).
type Entries = BTreeMap<String, (usize, String)>;

pub fn parse_config_str(text: &str) -> Result<ProblemConfig> {
    let mut entries = Entries::new();
    let mut section = String::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, content, "unterminated section header"))?
                .trim();
            if !matches!(
                name,
                "problem"
                    | "domain"
                    | "coefficients"
                    | "boundary"
                    | "stokes.boundary"
                    | "time"
                    | "coupling"
                    | "output"
                    | "exact"
                    | "convergence"
            ) {
                return Err(config_err(line, name, "unknown section"));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if section.is_empty() {
            return Err(config_err(line, key, "key outside any section"));
        }
        let full = format!("{section}.{key}");
        if entries.contains_key(&full) {
            return Err(config_err(line, full, "duplicate key"));
        }
        entries.insert(full, (line, value.to_string()));
    }
    build(entries, last_line)
}

struct Reader {
    entries: Entries,
    end_line: usize,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str, why: &str) -> Result<(usize, String)> {
        self.take(key)
            .ok_or_else(|| config_err(self.end_line, key, format!("missing; required {why}")))
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(line, key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn section(&mut self, prefix: &str) -> Vec<(String, usize, String)> {
        let keys: Vec<String> = self
            .entries
            .keys()
            .filter(|k| k.starts_with(prefix) && !k[prefix.len()..].contains('.'))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let (line, v) = self.entries.remove(&k).expect("key listed");
                (k[prefix.len()..].to_string(), line, v)
            })
            .collect()
    }
}

fn boundary_table(r: &mut Reader, section: &str) -> Result<BTreeMap<u32, BoundarySpec>> {
    let mut out = BTreeMap::new();
    for (key, line, value) in r.section(&format!("{section}.")) {
        let full = format!("{section}.{key}");
        let label: u32 = key
            .parse()
            .map_err(|_| config_err(line, &full, "boundary keys are integer labels"))?;
        let spec = value
            .parse()
            .map_err(|e: FemError| config_err(line, &full, e.to_string()))?;
        out.insert(label, spec);
    }
    Ok(out)
}

fn expr_table(r: &mut Reader, section: &str, allowed: &[&str]) -> Result<BTreeMap<String, Expr>> {
    let mut out = BTreeMap::new();
    for (key, line, value) in r.section(&format!("{section}.")) {
        let full = format!("{section}.{key}");
        if !allowed.contains(&key.as_str()) {
            return Err(config_err(line, full, "unknown key"));
        }
        let e = Expr::parse(&value).map_err(|e| config_err(line, &full, e.to_string()))?;
        out.insert(key, e);
    }
    Ok(out)
}

fn build(entries: Entries, end_line: usize) -> Result<ProblemConfig> {
    let mut r = Reader { entries, end_line };
    let (line, kind) = r.required("problem.kind", "for every problem")?;
    let kind: ProblemKind = kind
        .parse()
        .map_err(|e: FemError| config_err(line, "problem.kind", e.to_string()))?;
    let space = match r.take("problem.space") {
        None => None,
        Some((_, v)) if v == "p1" => Some(if kind.is_1d() {
            FeKind::P1Line
        } else {
            FeKind::P1Tri
        }),
        Some((line, v)) if v == "p2" => {
            if kind.is_1d() {
                return Err(config_err(line, "problem.space", "p2 is only available in 2D"));
            }
            Some(FeKind::P2Tri)
        }
        Some((line, v)) => return Err(config_err(line, "problem.space", format!("unknown space `{v}`"))),
    };
    let solver = match r.take("problem.solver") {
        None => None,
        Some((_, v)) if v == "lu" => Some(SolveMethod::Lu),
        Some((_, v)) if v == "cg" => Some(SolveMethod::Cg),
        Some((line, v)) => {
            return Err(config_err(
                line,
                "problem.solver",
                format!("unknown solver `{v}`"),
            ))
        }
    };
    let (line, shape) = r.required("domain.shape", "for every problem")?;
    let domain: DomainSpec = shape
        .parse()
        .map_err(|e: FemError| config_err(line, "domain.shape", e.to_string()))?;
    domain
        .validate()
        .map_err(|e| config_err(line, "domain.shape", e.to_string()))?;

    let coefficients = expr_table(&mut r, "coefficients", &COEFFICIENT_KEYS)?;
    let boundary = boundary_table(&mut r, "boundary")?;
    let stokes_boundary = boundary_table(&mut r, "stokes.boundary")?;
    let exact = expr_table(&mut r, "exact", &EXACT_KEYS)?;

    let convergence = if kind == ProblemKind::Convergence {
        let (line, t) = r.required("convergence.target", "for convergence studies")?;
        let target: ProblemKind = t
            .parse()
            .map_err(|e: FemError| config_err(line, "convergence.target", e.to_string()))?;
        if !matches!(
            target,
            ProblemKind::Poisson1d | ProblemKind::Poisson2d | ProblemKind::Stokes | ProblemKind::AdvDiff1d
        ) {
            return Err(config_err(
                line,
                "convergence.target",
                format!("{target} has no convergence study"),
            ));
        }
        let levels = r.parsed("convergence.levels")?.unwrap_or(4);
        Some(ConvergenceConfig { target, levels })
    } else {
        None
    };
    let target = convergence.map_or(kind, |c| c.target);

    let time = if target.is_transient() {
        let dt = r
            .parsed::<f64>("time.dt")?
            .ok_or_else(|| config_err(end_line, "time.dt", format!("missing; required for {target}")))?;
        let t_final = r.parsed::<f64>("time.t_final")?.ok_or_else(|| {
            config_err(
                end_line,
                "time.t_final",
                format!("missing; required for {target}"),
            )
        })?;
        let t_gate = r.parsed::<f64>("time.t_gate")?;
        if target == ProblemKind::Coupled && t_gate.is_none() {
            return Err(config_err(
                end_line,
                "time.t_gate",
                "missing; required for coupled",
            ));
        }
        let output_every = r.parsed::<usize>("time.output_every")?.unwrap_or(1);
        Some(TimeConfig {
            dt,
            t_final,
            t_gate,
            output_every,
        })
    } else {
        None
    };
    let gate_label = r.parsed::<u32>("coupling.gate_label")?;
    if target == ProblemKind::Coupled && gate_label.is_none() {
        return Err(config_err(
            end_line,
            "coupling.gate_label",
            "missing; required for coupled",
        ));
    }

    let format = match r.take("output.format") {
        None => OutputFormat::Csv,
        Some((_, v)) if v == "csv" => OutputFormat::Csv,
        Some((_, v)) if v == "vtk" => OutputFormat::Vtk,
        Some((_, v)) if v == "both" => OutputFormat::Both,
        Some((line, v)) => return Err(config_err(line, "output.format", format!("unknown format `{v}`"))),
    };
    let prefix = r
        .take("output.prefix")
        .map_or_else(|| target.name().to_string(), |(_, v)| v);

    if let Some((key, (line, _))) = r.entries.iter().next() {
        return Err(config_err(*line, key.clone(), "unknown key"));
    }

    let config = ProblemConfig {
        kind,
        space,
        solver,
        domain,
        coefficients,
        boundary,
        stokes_boundary,
        time,
        gate_label,
        output: OutputConfig { format, prefix },
        exact,
        convergence,
    };
    check_semantics(&config, end_line)?;
    Ok(config)
}

fn check_semantics(c: &ProblemConfig, line: usize) -> Result<()> {
    let target = c.target();
    let dim_ok = match c.domain {
        DomainSpec::Interval { .. } => target.is_1d(),
        _ => !target.is_1d(),
    };
    if !dim_ok {
        return Err(config_err(
            line,
            "domain.shape",
            format!("{} is not a domain for {target}", c.domain),
        ));
    }
    if c.boundary.is_empty() {
        return Err(config_err(
            line,
            "boundary",
            format!("missing; {target} needs boundary conditions"),
        ));
    }
    let need = |key: &str| -> Result<()> {
        if c.coefficients.contains_key(key) {
            Ok(())
        } else {
            Err(config_err(
                line,
                format!("coefficients.{key}"),
                format!("missing; required for {target}"),
            ))
        }
    };
    match target {
        ProblemKind::AdvDiff1d | ProblemKind::AdvDiff2d => need("mu")?,
        ProblemKind::Coupled => {
            need("mu")?;
            need("mu_stokes")?;
            if c.stokes_boundary.is_empty() {
                return Err(config_err(
                    line,
                    "stokes.boundary",
                    "missing; required for coupled",
                ));
            }
        }
        _ => {}
    }
    if c.kind == ProblemKind::Convergence {
        let key = if target == ProblemKind::Stokes { "u1" } else { "u" };
        if !c.exact.contains_key(key) {
            return Err(config_err(
                line,
                format!("exact.{key}"),
                "missing; a convergence study needs the exact solution",
            ));
        }
    }
    for name in ["mu", "mu_stokes", "kappa", "epsilon"] {
        c.constant(name, 0.0)
            .map_err(|_| config_err(line, format!("coefficients.{name}"), "must be a constant"))?;
    }
    Ok(())
}

/// Canonical text form; `parse_config_str(&serialize_config(c)) == c`.
pub fn serialize_config(c: &ProblemConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[problem]\nkind = {}", c.kind);
    if let Some(k) = c.space {
        let _ = writeln!(s, "space = {}", space_name(k));
    }
    if let Some(m) = c.solver {
        let _ = writeln!(s, "solver = {}", if m == SolveMethod::Lu { "lu" } else { "cg" });
    }
    let _ = writeln!(s, "\n[domain]\nshape = {}", c.domain);
    if !c.coefficients.is_empty() {
        s.push_str("\n[coefficients]\n");
        for (k, v) in &c.coefficients {
            let _ = writeln!(s, "{k} = {v}");
        }
    }
    for (name, table) in [("boundary", &c.boundary), ("stokes.boundary", &c.stokes_boundary)] {
        if !table.is_empty() {
            let _ = writeln!(s, "\n[{name}]");
            for (l, b) in table {
                let _ = writeln!(s, "{l} = {b}");
            }
        }
    }
    if let Some(t) = c.time {
        let _ = writeln!(s, "\n[time]\ndt = {:?}\nt_final = {:?}", t.dt, t.t_final);
        if let Some(g) = t.t_gate {
            let _ = writeln!(s, "t_gate = {g:?}");
        }
        let _ = writeln!(s, "output_every = {}", t.output_every);
    }
    if let Some(g) = c.gate_label {
        let _ = writeln!(s, "\n[coupling]\ngate_label = {g}");
    }
    if !c.exact.is_empty() {
        s.push_str("\n[exact]\n");
        for (k, v) in &c.exact {
            let _ = writeln!(s, "{k} = {v}");
        }
    }
    if let Some(cv) = c.convergence {
        let _ = writeln!(
            s,
            "\n[convergence]\ntarget = {}\nlevels = {}",
            cv.target, cv.levels
        );
    }
    let _ = writeln!(
        s,
        "\n[output]\nformat = {}\nprefix = {}",
        c.output.format.name(),
        c.output.prefix
    );
    s
}

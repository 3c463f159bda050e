use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use femkit::elements::{FeKind, FeSpace};
use femkit::io::output::vtk_string;
use femkit::io::{parse_config, parse_config_str, serialize_config, VtkData};
use femkit::mesh::DomainSpec;
use std::sync::Arc;

fn femkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_femkit"))
        .args(args)
        .output()
        .expect("spawn femkit")
}

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn example(name: &str) -> String {
    examples().join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Checks a legacy VTK 3.0 ASCII unstructured grid and returns
/// (points, cells, point-data arrays).
fn check_vtk(text: &str) -> (usize, usize, Vec<String>) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    let title = lines.next().unwrap();
    assert!(!title.is_empty() && title.len() <= 256);
    assert_eq!(lines.next(), Some("ASCII"));
    assert_eq!(lines.next(), Some("DATASET UNSTRUCTURED_GRID"));

    let header = |line: Option<&str>, key: &str| -> Vec<String> {
        let line = line.unwrap_or_else(|| panic!("missing {key}"));
        let toks: Vec<String> = line.split_whitespace().map(String::from).collect();
        assert_eq!(toks[0], key, "expected {key}, got {line}");
        toks
    };
    let nums = |line: &str, n: usize| -> Vec<f64> {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(v.len(), n, "bad row {line:?}");
        assert!(v.iter().all(|x| x.is_finite()));
        v
    };

    let p = header(lines.next(), "POINTS");
    assert_eq!(p[2], "double");
    let np: usize = p[1].parse().unwrap();
    for _ in 0..np {
        nums(lines.next().unwrap(), 3);
    }
    let c = header(lines.next(), "CELLS");
    let (nc, size): (usize, usize) = (c[1].parse().unwrap(), c[2].parse().unwrap());
    let mut seen = 0;
    let mut arity = Vec::new();
    for _ in 0..nc {
        let row: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(row[0] + 1, row.len());
        assert!(row[1..].iter().all(|&v| v < np));
        seen += row.len();
        arity.push(row[0]);
    }
    assert_eq!(seen, size);
    let t = header(lines.next(), "CELL_TYPES");
    assert_eq!(t[1].parse::<usize>().unwrap(), nc);
    for k in 0..nc {
        let ty: u8 = lines.next().unwrap().trim().parse().unwrap();
        assert_eq!((ty, arity[k]), if ty == 3 { (3, 2) } else { (5, 3) });
    }
    let mut arrays = Vec::new();
    if let Some(line) = lines.next() {
        let pd = header(Some(line), "POINT_DATA");
        assert_eq!(pd[1].parse::<usize>().unwrap(), np);
        while let Some(line) = lines.next() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "SCALARS" => {
                    assert_eq!(toks[2], "double");
                    assert_eq!(lines.next(), Some("LOOKUP_TABLE default"));
                    for _ in 0..np {
                        nums(lines.next().unwrap(), 1);
                    }
                }
                "VECTORS" => {
                    assert_eq!(toks[2], "double");
                    for _ in 0..np {
                        nums(lines.next().unwrap(), 3);
                    }
                }
                other => panic!("unexpected section {other}"),
            }
            arrays.push(toks[1].to_string());
        }
    }
    (np, nc, arrays)
}

#[test]
fn solve_laplace_matches_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = femkit(&[
        "solve",
        &example("laplace1d.cfg"),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("laplace1d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    let golden = [1.0, 23.0 / 25.0, 22.0 / 25.0, 22.0 / 25.0, 23.0 / 25.0, 1.0];
    assert_eq!(rows.len(), 6);
    for (k, ((x, v), g)) in rows.iter().zip(golden).enumerate() {
        assert!((x - k as f64 / 5.0).abs() < 1e-15);
        assert!((v - g).abs() < 1e-12, "row {k}: {v} vs {g}");
    }
    assert!(!csv.contains('\r'));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = femkit(&["solve", "/nonexistent/missing.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.cfg"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(femkit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(femkit(&[]).status.code(), Some(1));
    assert_eq!(femkit(&["solve"]).status.code(), Some(1));
}

#[test]
fn version_and_help_exit_zero() {
    let v = femkit(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(femkit(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(
        &path,
        "[problem]\nkind = poisson1d\n[domain]\nshape = interval(0, 1, 5)\n[coefficients]\nf = sin(x)*\n",
    )
    .unwrap();
    let out = femkit(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("line 6"), "{msg}");
}

#[test]
fn hanging_node_mesh_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hanging.mesh");
    std::fs::write(
        &path,
        "femkit-mesh 1\n5 3 5\n0 0\n2 0\n0 2\n2 2\n1 1\n0 1 2\n1 3 4\n4 3 2\n0 1 1\n1 3 1\n3 2 1\n2 0 1\n1 4 1\n",
    )
    .unwrap();
    let out = femkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn generated_mesh_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dike.mesh");
    let out = femkit(&["mesh", "dike(6,2)", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = femkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        femkit(&["mesh", "disk(-1,2,8)", "-o", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn stokes_vtk_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = femkit(&[
        "solve",
        &example("stokes_manufactured.cfg"),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("stokes_manufactured.vtk")).unwrap();
    let (np, nc, arrays) = check_vtk(&text);
    assert_eq!((np, nc), (81, 128));
    assert_eq!(arrays, ["velocity", "pressure"]);
    for f in ["_u1.csv", "_u2.csv", "_p.csv"] {
        assert!(dir.path().join(format!("stokes_manufactured{f}")).exists());
    }
}

#[test]
fn vtk_without_fields_and_on_intervals() {
    let mesh = Arc::new(
        DomainSpec::Disk {
            radius: 1.0,
            n_r: 2,
            n_theta: 8,
        }
        .build()
        .unwrap(),
    );
    let (np, _, arrays) = check_vtk(&vtk_string(&mesh, &[]).unwrap());
    assert_eq!(np, mesh.n_vertices());
    assert!(arrays.is_empty());

    let line = Arc::new(DomainSpec::Interval { a: 0.0, b: 2.0, n: 4 }.build().unwrap());
    let space = FeSpace::new(line, FeKind::P1Line).unwrap();
    let u = space.interpolate(|x| x[0] * x[0]);
    let (np, nc, arrays) = check_vtk(&vtk_string(space.mesh(), &[VtkData::Scalars("u", &u)]).unwrap());
    assert_eq!((np, nc), (5, 4));
    assert_eq!(arrays, ["u"]);
}

#[test]
fn shipped_configs_round_trip() {
    for entry in std::fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let cfg = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let text = serialize_config(&cfg);
            let again = parse_config_str(&text).unwrap();
            assert_eq!(serialize_config(&again), text, "{}", path.display());
        }
    }
}

#[test]
fn convergence_command_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = femkit(&[
        "convergence",
        &example("poisson2d_p1_convergence.cfg"),
        "--levels",
        "3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let csv = std::fs::read_to_string(entries[0].as_ref().unwrap().path()).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

/// Every shipped example runs to completion.
#[test]
fn shipped_examples_exit_zero() {
    for entry in std::fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let dir = tempfile::tempdir().unwrap();
            let out = femkit(&[
                "solve",
                path.to_str().unwrap(),
                "--out-dir",
                dir.path().to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr(&out));
            assert!(std::fs::read_dir(dir.path()).unwrap().next().is_some());
        }
    }
}

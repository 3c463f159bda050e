"""Smoke test for the femkit extension module.

    pip install -e crates/python --no-build-isolation
    python3 python/smoke_test.py
"""

import math
import os
import tempfile

import femkit


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def test_poisson_1d():
    mesh = femkit.Mesh("interval(0, 1, 5)")
    u = femkit.poisson(mesh, f=-1, dirichlet={1: 1, 2: 1})
    golden = [1, 23 / 25, 22 / 25, 22 / 25, 23 / 25, 1]
    for v, g in zip(u.values(), golden):
        close(v, g, 1e-12)
    close(u(0.5), 22 / 25, 1e-12)
    cg = femkit.poisson(mesh, f=-1, dirichlet={1: 1, 2: 1}, solver="cg")
    for a, b in zip(u.values(), cg.values()):
        close(a, b, 1e-10)


def test_poisson_2d_p2_is_exact_on_quadratics():
    mesh = femkit.Mesh("rectangle(0, 1, 0, 1, 3, 3)")
    exact = "x^2 + x*y"
    u = femkit.poisson(mesh, f=-2, dirichlet={l: exact for l in mesh.labels}, space="p2")
    assert u.space == "p2"
    assert u.l2_error(exact) < 1e-12


def test_assembly():
    mesh = femkit.Mesh("rectangle(0, 1, 0, 1, 4, 4)")
    _, _, mass = femkit.assemble(mesh, "mass", space="p2")
    close(sum(mass), 1.0, 1e-13)
    rows, cols, div = femkit.assemble(mesh, "divergence_x")
    assert max(rows) < 25 and max(cols) < 81
    xs, ws = femkit.gauss3()
    close(sum(w * x**4 for x, w in zip(xs, ws)), 2 / 5, 1e-14)
    pts, ws = femkit.triangle_quadrature()
    close(sum(ws), 0.5, 1e-15)


def test_stokes_manufactured():
    mesh = femkit.Mesh("rectangle(0, 1, 0, 1, 8, 8)")
    sol = femkit.stokes(mesh, mu=0.1, dirichlet={l: ("y", "x") for l in range(1, 5)}, fx=1, fy=1)
    assert sol.divergence < 1e-6
    assert sol.u1.l2_error("y") < 1e-6
    assert sol.pressure.l2_error("x + y - 1") < 1e-4
    close(sum(sol.flux(l) for l in range(1, 5)), 0.0, 1e-6)


def test_dike_mass_balance():
    mesh = femkit.Mesh("dike(23, 5)")
    sol = femkit.stokes(
        mesh, mu=0.1, dirichlet={1: (0, 0), 2: ("-1.5*(y-1)*(y+1)", 1)}, neumann=[3]
    )
    q_in, q_out = sol.flux(2), sol.flux(3)
    assert abs(q_in + q_out) <= 1e-3 * abs(q_in)


def test_advdiff_1d():
    mesh = femkit.Mesh("interval(0, 1, 200)")
    kw = dict(beta=(0.5, 0), dirichlet={1: 1, 2: 0})
    steady = femkit.advdiff_steady(mesh, 0.05, **kw)
    e10 = math.exp(10)
    err = max(abs(v - (e10 - math.exp(10 * x)) / (e10 - 1)) for v, (x, _) in zip(steady.values(), steady.dof_coords()))
    assert err <= 5e-3
    snaps = femkit.advdiff(mesh, 0.05, 0.1, 50.0, every=100, **kw)
    assert [s for s, _, _ in snaps] == [100, 200, 300, 400, 500]
    step, t, last = snaps[-1]
    close(t, 50.0, 1e-12)
    assert max(abs(a - b) for a, b in zip(last.values(), steady.values())) <= 1e-4


def test_config_and_errors():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    cfg = os.path.join(root, "crates", "core", "examples", "laplace1d.cfg")
    with tempfile.TemporaryDirectory() as out:
        files = femkit.solve_config(cfg, out)
        assert [os.path.basename(f) for f in files] == ["laplace1d.csv"]
    close(femkit.evaluate("sin(pi*x)^2", x=0.25), 0.5, 1e-15)
    for bad in (lambda: femkit.Mesh("disk(-1, 2, 8)"), lambda: femkit.evaluate("sin(x)*")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        femkit.solve_config("/nonexistent/missing.cfg")
    except OSError as e:
        assert "missing.cfg" in str(e)
    else:
        raise AssertionError("expected OSError")


if __name__ == "__main__":
    tests = [(name, fn) for name, fn in sorted(globals().items()) if name.startswith("test_")]
    for name, fn in tests:
        fn()
        print(f"ok  {name}")
    print(f"{len(tests)} passed")

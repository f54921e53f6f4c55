"""Smoke test for the wavefem extension module.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import math

import wavefem


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAILED: {what}")
    print(f"ok  {what}")


def main():
    mesh = wavefem.Mesh.structured(4)
    check((mesh.n_vertices, mesh.n_triangles, mesh.n_edges) == (25, 32, 56), "structured 4x4 mesh counts")
    check(abs(mesh.inverse_inequality_constant() - 18.0) < 1e-9, "inverse inequality constant is 18")
    lam = mesh.max_eigenvalue()
    check(0.0 < lam < 18.0 * 32.0, f"largest spatial eigenvalue {lam:.2f} below c_I h^-2")
    copy = wavefem.Mesh.from_text(mesh.to_text())
    check(copy.vertices() == mesh.vertices(), "mesh text round trip")

    sol = wavefem.solve("A1", 4, 8)
    check(sol.residual < 1e-10, f"space-time residual {sol.residual:.1e}")
    (a, dta, curl) = sol.evaluate(1.0, 0.3, 0.6)
    check(all(math.isfinite(v) for v in (*a, *dta, curl)), "point evaluation is finite")
    l2, semi = sol.errors()
    lu = wavefem.run_case("A1", 4, 8, solver="lu")
    check(abs(lu.l2 - l2) < 1e-10 * max(1.0, l2), "time marching and global LU agree")

    rows = wavefem.convergence_study("A1", [1, 2, 3])
    check(rows[0].eoc_l2 is None and all(r.eoc_semi > 0.7 for r in rows[1:]), "seminorm converges")
    check(all(b.seminorm < a.seminorm for a, b in zip(rows, rows[1:])), "errors decrease under refinement")

    grid = wavefem.cfl_sweep("A2", [4, 8], [5, 40])
    check(len(grid) == 2 and len(grid[0]) == 2, "step-size sweep shape")

    rep = wavefem.stability_report(5.0)
    check(rep.eigen_stable and rep.strict and len(rep.eigenvalues) == 4, "q = 5 is stable")
    check(not wavefem.stability_report(11.0).eigen_stable, "q = 11 is unstable")
    reports, runs = wavefem.stability_sweep(0.0, 100.0, 0.1)
    check(len(reports) == 1001, "sweep covers 1001 points")
    check([(round(a, 1), round(b, 1)) for a, b in runs] == [(10.1, 11.9), (60.1, 100.0)], f"unstable runs {runs}")
    check(wavefem.classify(5.0) and not wavefem.classify(11.0) and wavefem.classify(11.0, strict=False), "classifiers")
    strict, relaxed = wavefem.cfl_bounds(18.0)
    check(abs(strict - math.sqrt(10 / 18)) < 1e-12 and abs(relaxed - math.sqrt(60 / 18)) < 1e-12, "CFL ratios")
    _, growth, _ = wavefem.simulate_recursion(5.0, 2000)
    check(growth <= 1.0 + 1e-6, f"bounded recursion at q = 5 (growth {growth:.8f})")
    _, growth, _ = wavefem.simulate_recursion(80.0, 400)
    check(growth > 1.0, f"growing recursion at q = 80 (growth {growth:.4f})")

    ode = wavefem.ModalProblem(0.5, 4.0, 1.0, -0.5, lambda t: math.cos(2 * t) + t)
    c, _ = ode.solve(0.0)
    check(abs(c - 1.0) < 1e-12, "modal initial value")
    nodal = ode.discrete_solve(2.0, 16)
    check(len(nodal) == 33 and abs(nodal[-1] - ode.solve(2.0)[0]) < 1e-4, "discrete modal solve matches oracle")
    _, orders = ode.observed_orders(2.0, 8, 3)
    check(all(o > 2.5 for o in orders), f"nodal orders {[round(o, 2) for o in orders]}")
    poly = wavefem.ModalProblem(0.0, 1.0, 0.0, 0.0, [1.0])
    check(abs(poly.solve(1.0)[0] - (1 - math.cos(1.0))) < 1e-12, "polynomial forcing closed form")

    try:
        wavefem.solve("B7", 2, 2)
    except ValueError:
        print("ok  unknown case raises ValueError")
    else:
        raise SystemExit("FAILED: unknown case accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()

"""Acceptance gate.

One test per criterion; the conftest prints a PASS/FAIL line for each of them
at the end of the session.  Run alone with ``pytest tests/test_acceptance.py``
or ``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from platemix.harness import (canonical_domain, canonical_mesh, commuting_defect,
                              make_kirchhoff_case, make_rm_case, random_bubble_field,
                              run_convergence, run_t_sweep, verify_case)
from platemix.mesh import generate_square_hole_mesh, refine_uniform
from platemix.schemes import SchemeKind, bfs_cross_check, recover_shear, solve
from platemix.solver import estimate_infsup
from platemix.spaces import check_exact_sequence


class Budget:
    """Wall-clock budget of one criterion."""

    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s > {self.seconds}s"


def test_criterion_01_mesh_topology():
    with Budget(1.0):
        for holes in (1, 2):
            side, boxes = canonical_domain(holes)
            m = generate_square_hole_mesh(side, boxes, n=1)
            for _ in range(5):
                V, E, T = m.n_vertices, m.n_edges, m.n_triangles
                assert V - E + T == 1 - holes
                assert m.n_interior_edges == m.n_interior_vertices + T + holes - 1
                m = refine_uniform(m)


def test_criterion_02_exact_sequence():
    with Budget(10.0):
        for level in (1, 2, 3):
            rep = check_exact_sequence(canonical_mesh(level))
            T = rep.dim_p0_meanzero + 1
            assert rep.dim_rt == rep.dim_hole_constant + rep.dim_p0_meanzero
            assert rep.rot_rank == T - 1
            assert rep.kernel_residual <= 1e-12
            assert rep.ok, rep.violations


def test_criterion_03_commuting_interpolants():
    with Budget(10.0):
        m = canonical_mesh(2)
        rng = np.random.default_rng(2024)
        defects = []
        for _ in range(20):
            v = random_bubble_field(rng)
            defects.append(max(commuting_defect(m, v, "fortin"), commuting_defect(m, v, "rt")))
        assert max(defects) <= 1e-12, max(defects)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_criterion_04_primal_equivalence():
    with Budget(60.0):
        for t in (1.0, 1e-3):
            prob = make_rm_case(t).problem()
            for level in (1, 2, 3):
                m = canonical_mesh(level)
                a = solve(m, prob, SchemeKind.RM_PRIMAL)
                b = solve(m, prob, SchemeKind.RM_MIXED_REDUCED)
                assert _rel(a.phi.coefficients, b.phi.coefficients) <= 1e-8, (t, level)
                assert _rel(a.omega.coefficients, b.omega.coefficients) <= 1e-8, (t, level)


def test_criterion_05_shear_recovery():
    with Budget(30.0):
        for t in (1.0, 1e-2, 1e-3):
            prob = make_rm_case(t).problem()
            for level in (1, 2, 3):
                sol = solve(canonical_mesh(level), prob, SchemeKind.RM_MIXED_REDUCED)
                z = recover_shear(sol.phi, sol.omega, t)
                assert _rel(z.coefficients, sol.zeta.coefficients) <= 1e-8, (t, level)


def test_criterion_06_convergence_rates():
    runs = [(k, make_rm_case(t)) for k in ("rm-mixed", "rm-reduced") for t in (1.0, 1e-2, 1e-4)]
    runs += [(k, make_kirchhoff_case()) for k in ("k-mixed", "k-reduced")]
    with Budget(600.0):
        failures = []
        for kind, case in runs:
            table = run_convergence(kind, case, 4)
            for col in ("rate_phi", "rate_w"):
                r = table.column(col)[-1]
                if not 0.85 <= r <= 1.15:
                    failures.append((kind, case.t, col, r))
        assert not failures, failures


def test_criterion_07_t_robustness():
    with Budget(300.0):
        for kind in ("rm-mixed", "rm-reduced"):
            sweep = run_t_sweep(kind, [1.0, 1e-2, 1e-4, 1e-6], level=3)
            assert sweep.spread("err_total_xt") <= 3.0, (kind, sweep.column("err_total_xt"))


def test_criterion_08_infsup_uniformity():
    t_sweep = (1.0, 1e-2, 1e-4, 1e-6)
    with Budget(300.0):
        beta = np.array([[estimate_infsup(canonical_mesh(lev), t, lev).beta for t in t_sweep]
                         for lev in (1, 2, 3)])
        print("\nbeta[level, t]:\n", beta)
        assert np.all(beta > 0)
        assert np.all(beta[1:] / beta[:-1] >= 0.9)
        spread = beta.max(axis=1) / beta.min(axis=1)
        assert np.all(spread <= 2.0), f"beta spread over t per level: {spread}"


def test_criterion_09_bfs_cross_check():
    with Budget(120.0):
        prob = make_rm_case(1e-2).problem()
        reports = [bfs_cross_check(canonical_mesh(lev), prob) for lev in (1, 2, 3)]
        for name in ("phi", "omega", "y", "p", "alpha"):
            g = [r.gaps[name] for r in reports]
            # the relations hold exactly for the discrete schemes: gaps at roundoff count as decreasing
            decreasing = all(b < a for a, b in zip(g, g[1:]))
            assert decreasing or max(g) <= 1e-8, (name, g)


def test_criterion_10_manufactured_oracle():
    with Budget(5.0):
        for case in (make_rm_case(1.0), make_rm_case(1e-2), make_rm_case(1e-4),
                     make_kirchhoff_case()):
            rep = verify_case(case, n_points=100)
            assert rep.ok, (case.name, case.t, rep)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

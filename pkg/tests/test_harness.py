import dataclasses
import json
import math

import numpy as np
import pytest

from platemix.harness import (CSV_COLUMNS, ERROR_DEGREE, canonical_mesh, commuting_defect, error_norms,
                              fd_derivative, fd_weights, make_case, make_kirchhoff_case,
                              make_rm_case, max_workers, random_domain_points, run_convergence,
                              run_invariant_suite, run_t_sweep, verify_case)
from platemix.schemes import SchemeKind, SolutionFields, solve
from platemix.spaces import FieldFunction, SpaceKind, build_dofmap, interpolate_nodal


def boundary_points(n=50, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, 3, n)
    h = rng.uniform(1, 2, n)
    return np.concatenate([
        np.stack([s, 0 * s], 1), np.stack([s, 3 + 0 * s], 1), np.stack([0 * s, s], 1),
        np.stack([3 + 0 * s, s], 1), np.stack([h, 1 + 0 * h], 1), np.stack([2 + 0 * h, h], 1),
    ])


# ---------------------------------------------------------------- cases
def test_fields_vanish_on_boundary():
    P = boundary_points()
    c = make_rm_case(0.1)
    assert np.abs(c.omega(P[:, 0], P[:, 1])).max() == 0
    assert np.abs(np.stack(c.phi(P[:, 0], P[:, 1]))).max() <= 1e-12
    assert np.abs(np.stack(c.zeta(P[:, 0], P[:, 1]))).max() <= 1e-12


def test_zeta_independent_of_t_and_phi_structure():
    P = random_domain_points(30, seed=1)
    x, y = P.T
    a, b = make_rm_case(1.0), make_rm_case(1e-3)
    np.testing.assert_array_equal(np.stack(a.zeta(x, y)), np.stack(b.zeta(x, y)))
    for c in (a, b):
        lhs = np.stack(c.omega_grad(x, y)) - np.stack(c.phi(x, y))
        np.testing.assert_allclose(lhs, c.t ** 2 * np.stack(c.zeta(x, y)), atol=1e-12)


def test_kirchhoff_case_is_gradient():
    c = make_kirchhoff_case()
    P = random_domain_points(30, seed=2)
    x, y = P.T
    np.testing.assert_allclose(np.stack(c.phi(x, y)), np.stack(c.omega_grad(x, y)), atol=1e-12)
    (pxx, pxy), (pyx, pyy) = c.phi_grad(x, y)
    np.testing.assert_allclose(pyx - pxy, 0, atol=1e-11)
    assert c.is_kirchhoff and c.zeta is None


def test_case_errors():
    with pytest.raises(ValueError):
        make_rm_case(0.0)
    with pytest.raises(ValueError):
        make_case("mitc")


# ---------------------------------------------------------------- oracle
@pytest.mark.parametrize("order", [1, 2])
def test_fd_weights_exact_on_polynomials(order):
    w = fd_weights(order)
    k = np.arange(9) - 4
    for p in range(9):
        exact = math.factorial(order) if p == order else 0.0
        assert np.dot(w, k.astype(float) ** p) == pytest.approx(exact, abs=1e-9)


def test_fd_derivative_of_polynomial():
    P = np.random.default_rng(0).uniform(0, 1, (10, 2))
    f = lambda Q: Q[:, 0] ** 7 * Q[:, 1] ** 3
    np.testing.assert_allclose(fd_derivative(f, P, 0), 7 * P[:, 0] ** 6 * P[:, 1] ** 3, rtol=1e-9,
                               atol=1e-12)


@pytest.mark.parametrize("t", [1.0, 1e-2, 1e-6])
def test_oracle_accepts_rm_case(t):
    rep = verify_case(make_rm_case(t))
    assert rep.ok, rep
    assert max(rep.rel_f, rep.rel_g, rep.rel_shear) <= 1e-10


def test_oracle_accepts_kirchhoff_case():
    rep = verify_case(make_kirchhoff_case())
    assert rep.ok and rep.rel_g <= 1e-10


def test_oracle_rejects_perturbed_loads():
    c = make_rm_case(0.5)
    bad_g = dataclasses.replace(c, g=lambda x, y: c.g(x, y) * (1 + 1e-4))
    assert not verify_case(bad_g).ok
    bad_f = dataclasses.replace(c, f=lambda x, y: tuple(v + 1e-3 for v in c.f(x, y)))
    assert not verify_case(bad_f).ok
    k = make_kirchhoff_case()
    assert not verify_case(dataclasses.replace(k, g=lambda x, y: k.g(x, y) + 1e-3)).ok


def test_oracle_rejects_inconsistent_shear():
    c = make_rm_case(0.5)
    bad = dataclasses.replace(c, zeta=lambda x, y: tuple(1.01 * v for v in c.zeta(x, y)))
    assert not verify_case(bad).ok


def test_random_points_avoid_hole():
    P = random_domain_points(200, seed=3)
    inside = (P[:, 0] > 1) & (P[:, 0] < 2) & (P[:, 1] > 1) & (P[:, 1] < 2)
    assert not inside.any() and P.min() >= 0 and P.max() <= 3


# ---------------------------------------------------------------- errors
def _interpolant_solution(case, level):
    m = canonical_mesh(level)
    br = build_dofmap(m, SpaceKind.BR_VEC)
    p1 = build_dofmap(m, SpaceKind.P1_ZERO)
    coef = np.zeros(br.n_dofs)
    iv = m.interior_vertices
    px, py = case.phi(*m.vertices[iv].T)
    coef[br.vertex_dof[iv]], coef[br.vertex_dof[iv] + 1] = px, py
    return SolutionFields(SchemeKind.K_MIXED, 0.0, FieldFunction(br, coef),
                          interpolate_nodal(p1, case.omega))


def test_interpolation_errors_first_order():
    case = make_kirchhoff_case()
    e = [error_norms(_interpolant_solution(case, lev), case) for lev in (3, 4, 5)]
    for name in ("err_phi_h1", "err_w_h1"):
        v = np.array([getattr(r, name) for r in e])
        rates = np.log2(v[:-1] / v[1:])
        assert np.all(rates > 0.9) and np.all(rates < 1.2), (name, rates)


def test_quadrature_saturation():
    case = make_rm_case(0.1)
    sol = solve(canonical_mesh(2), case.problem(), SchemeKind.RM_MIXED)
    a, b = error_norms(sol, case), error_norms(sol, case, degree=2 * ERROR_DEGREE)
    for k in ("err_phi_h1", "err_w_h1", "err_zeta_xt"):
        assert abs(getattr(a, k) - getattr(b, k)) <= 1e-10 * getattr(b, k)


def test_errors_decrease_and_multiplier_columns():
    tab = run_convergence("rm-mixed", make_rm_case(1.0), 3)
    e = tab.column("err_phi_h1")
    assert np.all(np.diff(e) < 0)
    assert np.isfinite(tab.column("err_y_h1")[0]) and np.isfinite(tab.column("err_p_l2")[0])
    assert np.all(np.isnan(tab.column("err_y_h1")[1:]))


def test_csv_is_bitwise_reproducible(tmp_path):
    a = run_convergence("k-mixed", make_kirchhoff_case(), 2).to_csv()
    b = run_convergence("k-mixed", make_kirchhoff_case(), 2).to_csv(tmp_path / "t.csv")
    assert a == b == (tmp_path / "t.csv").read_text()
    lines = a.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3


def test_json_output():
    tab = run_convergence("k-reduced", make_kirchhoff_case(), 2)
    data = json.loads(tab.to_json())
    assert data["scheme"] == "k-reduced" and data["case"] == "kirchhoff"
    assert data["rows"][0]["rate_phi"] is None
    assert data["rows"][1]["rate_phi"] == pytest.approx(tab.rows[1]["rate_phi"])


def test_reduced_and_primal_tables_agree():
    case = make_rm_case(1e-2)
    a = run_convergence("rm-reduced", case, 2)
    b = run_convergence("rm-primal", case, 2)
    for col in ("err_phi_h1", "err_w_h1"):
        np.testing.assert_allclose(a.column(col), b.column(col), rtol=1e-8)


def test_mismatched_case_rejected():
    with pytest.raises(ValueError, match="does not match"):
        run_convergence("k-mixed", make_rm_case(1.0), 1)


def test_primal_recovered_shear_converges():
    tab = run_convergence("rm-primal", make_rm_case(1.0), 4)
    assert tab.column("rate_zeta_l2")[-1] >= 0.85


# ---------------------------------------------------------------- t-sweep
def test_t_sweep_consistency_and_no_locking(monkeypatch):
    monkeypatch.setenv("PLATEMIX_THREADS", "2")
    sweep = run_t_sweep("rm-mixed", [1.0, 1e-3, 1e-6], level=2)
    assert [r["t"] for r in sweep.rows] == [1.0, 1e-3, 1e-6]
    row = run_convergence("rm-mixed", make_rm_case(1.0), 1, first_level=2).rows[0]
    for k in ("err_phi_h1", "err_w_h1", "err_zeta_xt"):
        assert sweep.rows[0][k] == row[k]
    tot = sweep.column("err_total_xt")
    assert np.all(np.isfinite(tot)) and tot.max() / tot.min() < 3
    assert sweep.to_csv().startswith("t,h,ndofs")
    with pytest.raises(ValueError):
        run_t_sweep("k-mixed", [1.0], 1)


def test_max_workers(monkeypatch):
    monkeypatch.setenv("PLATEMIX_THREADS", "3")
    assert max_workers(10) == 3 and max_workers(2) == 2
    monkeypatch.setenv("PLATEMIX_THREADS", "junk")
    assert max_workers(1) == 1


# ---------------------------------------------------------------- invariants
def test_invariant_suite():
    results = run_invariant_suite(levels=2, n_fields=2)
    assert results and all(r.ok for r in results), [r for r in results if not r.ok]


def test_commuting_defect_rejects_unknown():
    with pytest.raises(ValueError):
        commuting_defect(canonical_mesh(1), lambda x, y: (x, y), "clement")

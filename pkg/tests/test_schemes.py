import numpy as np
import pytest
import scipy.io

from platemix.forms import PlateMaterial, assemble
from platemix.harness import canonical_mesh, make_kirchhoff_case, make_rm_case
from platemix.schemes import (PlateProblem, SchemeKind, assemble_scheme, bfs_cross_check,
                              recover_shear, solve, solve_scheme)
from platemix.spaces import FieldFunction, SpaceKind, build_dofmap, gradient_matrix

ALL_KINDS = list(SchemeKind)


def rm_problem(t):
    return make_rm_case(t).problem()


@pytest.fixture(scope="module")
def m1():
    return canonical_mesh(1)


def test_parse():
    assert SchemeKind.parse("rm-mixed") is SchemeKind.RM_MIXED
    assert SchemeKind.parse("K_MIXED_REDUCED") is SchemeKind.K_MIXED_REDUCED
    assert SchemeKind.parse("bfs_check") is SchemeKind.BFS_CHECK
    with pytest.raises(ValueError):
        SchemeKind.parse("mitc")


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_systems_symmetric(kind, m1):
    prob = make_kirchhoff_case().problem() if kind.is_kirchhoff else rm_problem(0.1)
    A = assemble_scheme(m1, prob, kind).matrix
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()


def test_rm_mixed_unknown_count():
    m = canonical_mesh(2)
    sys_ = assemble_scheme(m, rm_problem(1.0), SchemeKind.RM_MIXED)
    Vi, Ei, T, J = m.n_interior_vertices, m.n_interior_edges, m.n_triangles, 1
    assert sys_.n == (2 * Vi + Ei) + Ei + Vi + (Vi + J) + T + 1
    assert sys_.layout_string() == (f"phi:{2 * Vi + Ei} zeta:{Ei} omega:{Vi} y:{Vi + J} p:{T} mean:1")


@pytest.mark.parametrize("rm,k", [(SchemeKind.RM_MIXED, SchemeKind.K_MIXED),
                                  (SchemeKind.RM_MIXED_REDUCED, SchemeKind.K_MIXED_REDUCED)])
def test_kirchhoff_is_rm_without_zeta(rm, k, m1):
    a = assemble_scheme(m1, rm_problem(0.3), rm)
    b = assemble_scheme(m1, make_kirchhoff_case().problem(), k)
    keep = {key for key in a.blocks if "zeta" not in key}
    assert keep == set(b.blocks)
    for key in keep:
        assert abs(a.blocks[key] - b.blocks[key]).max() == 0.0, key


def test_t_zero_routing(m1):
    prob = rm_problem(1.0).with_t(0.0)
    assert assemble_scheme(m1, prob, SchemeKind.RM_MIXED).kind is SchemeKind.K_MIXED
    assert assemble_scheme(m1, prob, SchemeKind.RM_MIXED_REDUCED).kind is SchemeKind.K_MIXED_REDUCED
    for kind in (SchemeKind.RM_PRIMAL, SchemeKind.BFS_CHECK):
        with pytest.raises(ValueError, match="t > 0"):
            assemble_scheme(m1, prob, kind)


def test_negative_t_and_coarse_mesh():
    with pytest.raises(ValueError):
        PlateProblem(PlateMaterial(t=-1.0))
    with pytest.raises(ValueError, match="insufficient resolution"):
        assemble_scheme(canonical_mesh(0), rm_problem(1.0), SchemeKind.RM_MIXED)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_zero_loads_zero_solution(kind, m1):
    prob = PlateProblem(PlateMaterial(t=0.5))
    sol = solve(m1, prob, kind)
    assert np.all(sol.phi.coefficients == 0) and np.all(sol.omega.coefficients == 0)


def test_matrix_market_export(tmp_path, m1):
    sys_ = assemble_scheme(m1, rm_problem(0.1), SchemeKind.RM_MIXED)
    sys_.to_matrix_market(tmp_path / "A.mtx", tmp_path / "b.txt")
    A = scipy.io.mmread(str(tmp_path / "A.mtx"))
    assert abs(A.tocsr() - sys_.matrix).max() <= 1e-15 * abs(sys_.matrix).max()
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "b.txt"), sys_.rhs)
    assert "rm-mixed" in (tmp_path / "A.mtx").read_text().splitlines()[1]


def test_split_matches_layout(m1):
    sys_ = assemble_scheme(m1, rm_problem(0.1), SchemeKind.RM_MIXED)
    parts = sys_.split(np.arange(sys_.n, dtype=float))
    assert [len(v) for v in parts.values()] == [f.size for f in sys_.layout]


def _constraint_residuals(sol, t):
    m = sol.mesh
    br, rt, p1 = (build_dofmap(m, k) for k in (SpaceKind.BR_VEC, SpaceKind.RT_ROT, SpaceKind.P1_ZERO))
    hc = build_dofmap(m, SpaceKind.P1_HOLE_CONSTANT)
    p0 = build_dofmap(m, SpaceKind.P0_MEANZERO)
    phi, w = sol.phi.coefficients, sol.omega.coefficients
    grad = assemble(br, hc, "vec_dot_grad").T @ phi - assemble(p1, hc, "grad_grad").T @ w
    rot = assemble(br, p0, "rot_times_p0").T @ phi
    if sol.zeta is not None and t > 0:
        z = sol.zeta.coefficients
        grad += t * t * assemble(rt, hc, "vec_dot_grad").T @ z
        rot += t * t * assemble(rt, p0, "rt_rot_p0").T @ z
    scale = np.linalg.norm(phi) + np.linalg.norm(w)
    return np.abs(grad).max() / scale, np.abs(rot).max() / scale


def test_discrete_constraints_rm_mixed(m1):
    t = 0.1
    sol = solve(m1, rm_problem(t), SchemeKind.RM_MIXED)
    g, r = _constraint_residuals(sol, t)
    assert g <= 1e-10 and r <= 1e-10
    assert abs(sol.mean) <= 1e-10


def test_discrete_constraints_k_mixed(m1):
    sol = solve(m1, make_kirchhoff_case().problem(), SchemeKind.K_MIXED)
    g, r = _constraint_residuals(sol, 0.0)
    assert g <= 1e-10 and r <= 1e-10


def test_small_t_approaches_kirchhoff_constraint(m1):
    sol = solve(m1, rm_problem(1e-8), SchemeKind.RM_MIXED)
    m = sol.mesh
    br = sol.phi.dofmap
    moments = assemble(br, build_dofmap(m, SpaceKind.P0_MEANZERO), "rot_times_p0").T @ sol.phi.coefficients
    sup_q = np.sqrt(np.sum(moments ** 2 / m.areas))  # sup over unit-L2 piecewise constants
    K1 = assemble(br, br, "mass_vec") + assemble(br, br, "grad_grad")
    phi_norm = np.sqrt(sol.phi.coefficients @ (K1 @ sol.phi.coefficients))
    assert sup_q <= 1e-6 * phi_norm


@pytest.mark.parametrize("t", [1.0, 1e-3])
def test_primal_equals_reduced_mixed(t, m1):
    a = solve(m1, rm_problem(t), SchemeKind.RM_PRIMAL)
    b = solve(m1, rm_problem(t), SchemeKind.RM_MIXED_REDUCED)
    for x, y in ((a.phi, b.phi), (a.omega, b.omega), (a.zeta, b.zeta)):
        assert np.linalg.norm(x.coefficients - y.coefficients) <= 1e-8 * np.linalg.norm(y.coefficients)


def test_recover_shear_of_compatible_pair(m1):
    br = build_dofmap(m1, SpaceKind.BR_VEC)
    p1 = build_dofmap(m1, SpaceKind.P1_ZERO)
    w = np.random.default_rng(0).standard_normal(p1.n_dofs)
    # bubbles carry the tangential integrals of grad w, vertex values vanish
    rt = build_dofmap(m1, SpaceKind.RT_ROT)
    gw = gradient_matrix(p1, rt) @ w
    phi = np.zeros(br.n_dofs)
    e = np.flatnonzero(br.edge_dof >= 0)
    phi[br.edge_dof[e]] = gw[rt.edge_dof[e]]
    z = recover_shear(FieldFunction(br, phi), FieldFunction(p1, w), 1.0)
    assert np.abs(z.coefficients).max() <= 1e-13


def test_recover_shear_single_hat(m1):
    br = build_dofmap(m1, SpaceKind.BR_VEC)
    p1 = build_dofmap(m1, SpaceKind.P1_ZERO)
    rt = build_dofmap(m1, SpaceKind.RT_ROT)
    w = np.zeros(p1.n_dofs)
    w[3] = 1.0
    z = recover_shear(FieldFunction(br), FieldFunction(p1, w), 1.0)
    v = int(np.flatnonzero(p1.vertex_dof == 3)[0])
    expect = np.zeros(rt.n_dofs)
    for e in np.flatnonzero(rt.edge_dof >= 0):
        a, b = m1.edges[e]
        expect[rt.edge_dof[e]] = float(b == v) - float(a == v)
    np.testing.assert_allclose(z.coefficients, expect, atol=1e-14)
    with pytest.raises(ValueError):
        recover_shear(FieldFunction(br), FieldFunction(p1, w), 0.0)


def test_bfs_zero_loads_and_smoke(m1):
    zero = bfs_cross_check(m1, PlateProblem(PlateMaterial(t=0.2)))
    assert all(v == 0 for v in zero.gaps.values())
    rep = bfs_cross_check(m1, rm_problem(1.0))
    assert len(rep.gaps) == 5 and all(np.isfinite(v) for v in rep.gaps.values())
    # the relations hold exactly for the discrete pair, the printed alpha sign does not
    assert max(rep.gaps.values()) <= 1e-8
    assert rep.alpha_printed > 0.1


def test_solution_report_fields(m1):
    sol = solve_scheme(assemble_scheme(m1, rm_problem(0.5), SchemeKind.RM_MIXED))
    assert sol.report.residual <= 1e-10
    assert sol.t == 0.5 and sol.mesh is m1
    k = solve(m1, make_kirchhoff_case().problem(), SchemeKind.K_MIXED)
    assert k.zeta is None and k.t == 0.0

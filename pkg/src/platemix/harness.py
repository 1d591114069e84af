"""Manufactured solutions, error norms and convergence drivers."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sym

from .forms import PlateMaterial, apply_C, assemble
from .mesh import Domain, Mesh, generate_square_hole_mesh, refine, validate
from .quadrature import quadrature
from .schemes import PlateProblem, SchemeKind, SolutionFields, solve
from .spaces import (FieldFunction, SpaceKind, build_dofmap, check_exact_sequence,
                     edge_tangential_integrals, interpolate_fortin, interpolate_rt)

ERROR_DEGREE = 16
CSV_COLUMNS = ("level", "h", "ndofs", "err_phi_h1", "err_w_h1", "err_zeta_xt", "err_p_l2",
               "err_y_h1", "rate_phi", "rate_w")


# ---------------------------------------------------------------------- domains
def canonical_domain(n_holes: int = 1) -> tuple[float, list]:
    """Outer side and hole boxes of the canonical test domains.

    One hole: ``[0,3]^2`` minus ``[1,2]^2``.  Two holes: ``[0,5]^2`` minus
    ``[1,2]^2`` and ``[3,4] x [1,2]``.
    """
    if n_holes == 1:
        return 3.0, [(1.0, 1.0, 2.0, 2.0)]
    if n_holes == 2:
        return 5.0, [(1.0, 1.0, 2.0, 2.0), (3.0, 1.0, 4.0, 2.0)]
    if n_holes == 0:
        return 3.0, []
    raise ValueError("canonical domains have 0, 1 or 2 holes")


def canonical_mesh(level: int, n_holes: int = 1) -> Mesh:
    """Level ``level`` = number of uniform refinements of the coarse grid."""
    side, holes = canonical_domain(n_holes)
    return refine(generate_square_hole_mesh(side, holes, n=1), level)


# ---------------------------------------------------------------------- cases
def _lam(expr, args):
    f = sym.lambdify(args, expr, "numpy")

    def call(X, Y, *par):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(np.asarray(f(X, np.asarray(Y, dtype=float), *par), dtype=float),
                               X.shape).copy()
    return call


def _bind(fns, *par):
    """Fix trailing parameters; nested tuples of callables give nested tuples of values."""
    if isinstance(fns, tuple):
        parts = tuple(_bind(f, *par) for f in fns)
        return lambda X, Y: tuple(p(X, Y) for p in parts)
    return lambda X, Y: fns(X, Y, *par)


@dataclass
class ManufacturedCase:
    """Closed-form exact fields and loads on the canonical domain.

    Scalar fields map ``(x, y)`` to arrays; vector fields return a pair
    ``(vx, vy)``; gradients of vectors return ``((d_x v_x, d_y v_x),
    (d_x v_y, d_y v_y))``.  ``zeta`` is ``None`` for the Kirchhoff case.
    """

    name: str
    t: float
    material: PlateMaterial
    omega: object
    omega_grad: object
    phi: object
    phi_grad: object
    f: object
    g: object
    zeta: object = None
    zeta_rot: object = None
    domain: Domain = field(default_factory=lambda: Domain.from_boxes(*canonical_domain(1)))
    expressions: dict = field(default_factory=dict, repr=False)

    @property
    def is_kirchhoff(self) -> bool:
        return self.zeta is None

    def problem(self) -> PlateProblem:
        return PlateProblem(self.material, self.f, self.g)


def _div_C_sym_grad(phi, E, nu, x, y):
    e = sym.Matrix([[sym.diff(phi[0], x), (sym.diff(phi[0], y) + sym.diff(phi[1], x)) / 2],
                    [(sym.diff(phi[0], y) + sym.diff(phi[1], x)) / 2, sym.diff(phi[1], y)]])
    E, nu = sym.nsimplify(E), sym.nsimplify(nu)
    s = E / (12 * (1 - nu ** 2)) * ((1 - nu) * e + nu * e.trace() * sym.eye(2))
    return [sym.diff(s[0, 0], x) + sym.diff(s[0, 1], y), sym.diff(s[1, 0], x) + sym.diff(s[1, 1], y)]


@lru_cache(maxsize=8)
def _case_functions(family: str, E: float, nu: float) -> dict:
    """Lambdified fields of a case family; RM functions take ``t^2`` as a third argument.

    ``b = q(x) q(y)`` with ``q(u) = u (3-u)(u-1)(u-2)``, ``omega = b^2``.
    """
    x, y, s = sym.symbols("x y s", real=True)  # s stands for t^2

    def q(u):
        return u * (3 - u) * (u - 1) * (u - 2)
    b = q(x) * q(y)
    w = b ** 2
    args = (x, y, s) if family == "rm" else (x, y)
    extra = s * b if family == "rm" else 0
    phi = [sym.diff(w, x) + extra, sym.diff(w, y) + extra]
    dc = _div_C_sym_grad(phi, E, nu, x, y)
    out = {
        "omega": _lam(w, args),
        "omega_grad": (_lam(sym.diff(w, x), args), _lam(sym.diff(w, y), args)),
        "phi": (_lam(phi[0], args), _lam(phi[1], args)),
        "phi_grad": tuple((_lam(sym.diff(c, x), args), _lam(sym.diff(c, y), args)) for c in phi),
        "expressions": {"omega": w, "phi": phi},
    }
    if family == "rm":
        f = [-dc[0] + b, -dc[1] + b]
        g = sym.diff(b, x) + sym.diff(b, y)
        zeta = [-b, -b]
        out.update({
            "f": (_lam(f[0], args), _lam(f[1], args)), "g": _lam(g, args),
            "zeta": (_lam(zeta[0], args), _lam(zeta[1], args)),
            "zeta_rot": _lam(sym.diff(zeta[1], x) - sym.diff(zeta[0], y), args),
        })
        out["expressions"].update({"zeta": zeta, "f": f, "g": g})
    else:
        g = sym.diff(dc[0], x) + sym.diff(dc[1], y)
        out.update({"f": (_lam(sym.Integer(0), args), _lam(sym.Integer(0), args)),
                    "g": _lam(g, args)})
        out["expressions"].update({"f": [0, 0], "g": g})
    return out


def make_rm_case(t: float, material: PlateMaterial | None = None) -> ManufacturedCase:
    """Reissner-Mindlin case with ``omega = b^2`` and ``phi = grad omega + t^2 (b, b)``.

    ``b = q(x) q(y)`` with ``q(u) = u (3-u)(u-1)(u-2)`` vanishes on every
    boundary line of the canonical domain.  The shear is ``zeta = -(b, b)``
    for every ``t``; ``f = -div C E(phi) + (b, b)`` and ``g = d_x b + d_y b``.
    """
    if not t > 0:
        raise ValueError("the Reissner-Mindlin case needs t > 0")
    base = material or PlateMaterial()
    mat = PlateMaterial(base.E, base.nu, base.lam, t)
    F = _case_functions("rm", mat.E, mat.nu)
    t2 = float(t) ** 2
    return ManufacturedCase(
        name="rm", t=float(t), material=mat,
        **{k: _bind(F[k], t2) for k in ("omega", "omega_grad", "phi", "phi_grad", "f", "g",
                                        "zeta", "zeta_rot")},
        expressions=F["expressions"],
    )


def make_kirchhoff_case(material: PlateMaterial | None = None) -> ManufacturedCase:
    """Kirchhoff case ``omega = b^2``, ``phi = grad omega``, ``f = 0``,
    ``g = div div (C grad^2 omega)``."""
    base = material or PlateMaterial()
    mat = PlateMaterial(base.E, base.nu, base.lam, 0.0)
    F = _case_functions("kirchhoff", mat.E, mat.nu)
    return ManufacturedCase(
        name="kirchhoff", t=0.0, material=mat,
        **{k: _bind(F[k]) for k in ("omega", "omega_grad", "phi", "phi_grad", "f", "g")},
        expressions=F["expressions"],
    )


def make_case(name: str, t: float = 1.0) -> ManufacturedCase:
    if name == "rm":
        return make_rm_case(t)
    if name == "kirchhoff":
        return make_kirchhoff_case()
    raise ValueError(f"unknown case {name!r}")


# ---------------------------------------------------------------------- FD oracle
def fd_weights(order: int, n_points: int = 9) -> np.ndarray:
    """Central finite-difference weights on ``-(n-1)/2 .. (n-1)/2`` (unit step).

    The stencil is exact for polynomials of degree ``< n_points``.
    """
    k = np.arange(n_points) - (n_points - 1) / 2
    V = np.vander(k, increasing=True).T  # V[j, i] = k_i^j
    rhs = np.zeros(n_points)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def fd_derivative(fun, pts: np.ndarray, axis: int, h: float = 0.05, n_points: int = 9):
    """First derivative of ``fun`` (points (N, 2) -> (N, ...)) along ``axis``.

    All shifted copies of ``pts`` are evaluated in a single call.
    """
    w = fd_weights(1, n_points)
    k = np.arange(n_points) - (n_points - 1) / 2
    keep = np.flatnonzero(np.abs(w) > 1e-12)
    N = len(pts)
    shifted = np.repeat(pts[None], len(keep), axis=0)
    shifted[:, :, axis] += (k[keep] * h)[:, None]
    vals = np.asarray(fun(shifted.reshape(-1, 2)))
    vals = vals.reshape((len(keep), N) + vals.shape[1:])
    return np.tensordot(w[keep], vals, axes=(0, 0)) / h


@dataclass
class OracleReport:
    """Relative max-norm defects of the loads (and of the shear relation) on a sample."""

    rel_f: float
    rel_g: float
    n_points: int
    tol: float
    rel_shear: float = 0.0
    symbolic_ok: bool = True

    @property
    def ok(self) -> bool:
        return (max(self.rel_f, self.rel_g, self.rel_shear) <= self.tol) and self.symbolic_ok


def random_domain_points(n: int, seed: int = 0, n_holes: int = 1) -> np.ndarray:
    """``n`` uniform random points of the canonical domain (outside the hole)."""
    side, holes = canonical_domain(n_holes)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = rng.uniform(0.0, side, size=2)
        if not any(x0 < p[0] < x1 and y0 < p[1] < y1 for x0, y0, x1, y1 in holes):
            out.append(p)
    return np.array(out)


def verify_case(case: ManufacturedCase, n_points: int = 100, seed: int = 0, h: float = 0.05,
                tol: float = 1e-6) -> OracleReport:
    """Check the loads of ``case`` against finite differences of its fields.

    Reissner-Mindlin: ``-div C E(phi) - zeta = f``, ``-div zeta = g`` and
    ``t^2 zeta = grad omega - phi``.  This is the first-order form of
    ``-div C E(phi) + t^-2 (phi - grad omega) = f`` and
    ``t^-2 (-lap omega + div phi) = g``; checking it term by term avoids the
    ``t^-2`` amplification of finite-difference roundoff.  The shear relation
    is measured relative to ``|grad omega|`` and is in addition confirmed
    symbolically.  Kirchhoff: ``div div (C grad^2 omega) = g``.

    Derivatives use nested 9-point central stencils, which are exact for the
    polynomial data (degree at most 8 in each variable) up to roundoff.
    Errors are max-norm errors over the sample relative to the max-norm of
    the reference quantity.
    """
    pts = random_domain_points(n_points, seed)
    mat = case.material

    def omega(P):
        return case.omega(P[:, 0], P[:, 1])

    def phi(P):
        return np.stack(case.phi(P[:, 0], P[:, 1]), axis=-1)

    def zeta(P):
        return np.stack(case.zeta(P[:, 0], P[:, 1]), axis=-1)

    def jac(fun):  # (N, ...) -> (N, ..., 2) with the derivative direction last
        return lambda P: np.stack([fd_derivative(fun, P, 0, h), fd_derivative(fun, P, 1, h)],
                                  axis=-1)

    def div_rows(fun):  # row-wise divergence of a (N, 2, 2) field
        return lambda P: fd_derivative(fun, P, 0, h)[:, :, 0] + fd_derivative(fun, P, 1, h)[:, :, 1]

    def moment(P):  # C E(phi), or C grad^2 omega for Kirchhoff
        J = jac(jac(omega))(P) if case.is_kirchhoff else jac(phi)(P)
        return apply_C(0.5 * (J + np.swapaxes(J, -1, -2)), mat)

    def rel(a, b):
        return float(np.abs(a - b).max() / np.abs(b).max())

    g_exact = case.g(pts[:, 0], pts[:, 1])
    if case.is_kirchhoff:
        dm = div_rows(moment)
        g_fd = fd_derivative(dm, pts, 0, h)[:, 0] + fd_derivative(dm, pts, 1, h)[:, 1]
        return OracleReport(0.0, rel(g_fd, g_exact), n_points, tol)

    Jz = jac(zeta)(pts)
    f_fd = -div_rows(moment)(pts) - zeta(pts)
    g_fd = -(Jz[:, 0, 0] + Jz[:, 1, 1])
    f_exact = np.stack(case.f(pts[:, 0], pts[:, 1]), axis=-1)
    gw = jac(omega)(pts)
    shear = float(np.abs(case.t ** 2 * zeta(pts) - (gw - phi(pts))).max() / np.abs(gw).max())
    return OracleReport(rel(f_fd, f_exact), rel(g_fd, g_exact), n_points, tol, shear,
                        _shear_identity_holds(case))


def _shear_identity_holds(case: ManufacturedCase) -> bool:
    """Symbolic check of ``t^2 zeta = grad omega - phi`` with ``t^2`` kept as a symbol."""
    ex = case.expressions
    if not ex or "zeta" not in ex:
        return True
    w, phi, zeta = ex["omega"], ex["phi"], ex["zeta"]
    x, y = sym.symbols("x y", real=True)
    s = sym.symbols("s", real=True)
    grad = (sym.diff(w, x), sym.diff(w, y))
    return all(sym.expand(s * zeta[i] - grad[i] + phi[i]) == 0 for i in range(2))


# ---------------------------------------------------------------------- errors
def _exact_at(fn, pts):
    out = fn(pts[..., 0], pts[..., 1])
    if isinstance(out, tuple):
        if isinstance(out[0], tuple):
            return np.stack([np.stack(r, axis=-1) for r in out], axis=-2)
        return np.stack(out, axis=-1)
    return out


def _sq(a):
    a = a.reshape(a.shape[:2] + (-1,))
    return np.sum(a * a, axis=-1)


def _fine_points(m: Mesh, degree: int):
    rule = quadrature(degree)
    pts = np.einsum("qi,tia->tqa", rule.points, m.coords)
    w = rule.weights[None, :] * m.areas[:, None]
    return rule, pts, w


def _diff_on(fine: FieldFunction, coarse: FieldFunction, degree: int, with_grad: bool):
    """Squared L2 (and H1 seminorm) differences, integrated on the fine mesh."""
    rule, pts, w = _fine_points(fine.mesh, degree)
    flat = pts.reshape(-1, 2)
    dv = fine.evaluate_local(rule.points) - coarse.evaluate(flat).reshape(pts.shape[:2])
    l2 = float(np.sum(w * dv * dv))
    if not with_grad:
        return l2, 0.0
    dg = fine.evaluate_local(rule.points, what="grad") - \
        coarse.evaluate(flat, what="grad").reshape(pts.shape[:2] + (2,))
    return l2, float(np.sum(w * _sq(dg)))


@dataclass
class ErrorRecord:
    err_phi_h1: float
    err_w_h1: float
    err_zeta_xt: float = float("nan")
    err_p_l2: float = float("nan")
    err_y_h1: float = float("nan")
    err_zeta_l2: float = float("nan")   # t ||zeta - zeta_h||_0
    err_zeta_rot: float = float("nan")  # t^2 ||rot(zeta - zeta_h)||_0

    @property
    def err_total_xt(self) -> float:
        """``||phi||_1 + ||omega||_1 + t||zeta||_0 + t^2 ||rot zeta||_0`` part of the error."""
        z = 0.0 if math.isnan(self.err_zeta_xt) else self.err_zeta_xt
        return self.err_phi_h1 + self.err_w_h1 + z

    def as_dict(self) -> dict:
        return {"err_phi_h1": self.err_phi_h1, "err_w_h1": self.err_w_h1,
                "err_zeta_xt": self.err_zeta_xt, "err_p_l2": self.err_p_l2,
                "err_y_h1": self.err_y_h1, "err_zeta_l2": self.err_zeta_l2,
                "err_zeta_rot": self.err_zeta_rot, "err_total_xt": self.err_total_xt}


def error_norms(sol: SolutionFields, case: ManufacturedCase, reference: SolutionFields | None = None,
                degree: int = ERROR_DEGREE) -> ErrorRecord:
    """Errors of ``sol`` against ``case``.

    ``phi`` and ``omega`` are measured in the full H1 norm, ``zeta`` in
    ``t||.||_0 + t^2||rot .||_0``.  The multipliers have no closed form; if a
    ``reference`` solution on a refinement of ``sol.mesh`` is given, ``y`` (H1)
    and ``p`` (L2) are measured against it, otherwise they are NaN.
    """
    m = sol.mesh
    rule, pts, w = _fine_points(m, degree)
    ephi = sol.phi.evaluate_local(rule.points) - _exact_at(case.phi, pts)
    egphi = sol.phi.evaluate_local(rule.points, what="grad") - _exact_at(case.phi_grad, pts)
    ew = sol.omega.evaluate_local(rule.points) - _exact_at(case.omega, pts)
    egw = sol.omega.evaluate_local(rule.points, what="grad") - _exact_at(case.omega_grad, pts)
    rec = ErrorRecord(float(np.sqrt(np.sum(w * (_sq(ephi) + _sq(egphi))))),
                      float(np.sqrt(np.sum(w * (ew * ew + _sq(egw))))))
    if sol.zeta is not None and case.zeta is not None and sol.kind is not SchemeKind.BFS_CHECK:
        t = case.t
        ez = sol.zeta.evaluate_local(rule.points) - _exact_at(case.zeta, pts)
        er = sol.zeta.evaluate_local(rule.points, what="rot") - _exact_at(case.zeta_rot, pts)
        rec.err_zeta_l2 = float(t * np.sqrt(np.sum(w * _sq(ez))))
        rec.err_zeta_rot = float(t * t * np.sqrt(np.sum(w * er * er)))
        rec.err_zeta_xt = rec.err_zeta_l2 + rec.err_zeta_rot
    if reference is not None:
        if reference.y is not None and sol.y is not None:
            l2, h1 = _diff_on(reference.y, sol.y, degree, True)
            rec.err_y_h1 = math.sqrt(l2 + h1)
        if reference.p is not None and sol.p is not None:
            l2, _ = _diff_on(reference.p, sol.p, degree, False)
            rec.err_p_l2 = math.sqrt(l2)
    return rec


# ---------------------------------------------------------------------- tables
def _rate(e0: float, e1: float) -> float:
    if not (e0 > 0 and e1 > 0) or math.isnan(e0) or math.isnan(e1):
        return float("nan")
    return math.log2(e0 / e1)


@dataclass
class ConvergenceTable:
    """One row per level; rates are ``log2(e_prev / e)``."""

    scheme: str
    case: str
    t: float
    rows: list = field(default_factory=list)

    def add(self, level: int, h: float, ndofs: int, errors: ErrorRecord):
        row = {"level": level, "h": h, "ndofs": ndofs, **errors.as_dict()}
        self.rows.append(row)
        self.update_rates()

    def update_rates(self):
        keys = ("err_phi_h1", "err_w_h1", "err_zeta_xt", "err_p_l2", "err_y_h1", "err_zeta_l2",
                "err_zeta_rot", "err_total_xt")
        for i, row in enumerate(self.rows):
            for k in keys:
                name = "rate_" + {"err_phi_h1": "phi", "err_w_h1": "w"}.get(k, k[4:])
                row[name] = float("nan") if i == 0 else _rate(self.rows[i - 1][k], row[k])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.rows:
            wr.writerow([r["level"], *(_fmt(r[c]) for c in CSV_COLUMNS[1:])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None) -> str:
        text = json.dumps({"scheme": self.scheme, "case": self.case, "t": self.t,
                           "columns": list(CSV_COLUMNS),
                           "rows": [{k: _json_num(v) for k, v in r.items()} for r in self.rows]},
                          indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "nan" if math.isnan(v) else repr(float(v))


def _json_num(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    return None if math.isnan(v) else float(v)


def _ndofs(sol: SolutionFields) -> int:
    return len(sol.report.x)


def run_convergence(kind, case: ManufacturedCase, levels: int, n_holes: int = 1,
                    first_level: int = 1, reference_offset: int = 2) -> ConvergenceTable:
    """Solve on levels ``first_level .. first_level + levels - 1`` and tabulate errors.

    Multiplier errors use the solution ``reference_offset`` levels finer from
    the same run, so they are NaN on the last ``reference_offset`` levels.
    """
    kind = SchemeKind.parse(kind)
    if levels < 1:
        raise ValueError("levels must be positive")
    if kind.is_kirchhoff != case.is_kirchhoff and kind is not SchemeKind.BFS_CHECK:
        raise ValueError(f"scheme {kind.value} does not match case {case.name}")
    prob = case.problem()
    sols, meshes = [], []
    for lev in range(first_level, first_level + levels):
        m = canonical_mesh(lev, n_holes)
        meshes.append(m)
        sols.append(solve(m, prob, kind))
    table = ConvergenceTable(kind.value, case.name, case.t)
    for i, (lev, m, s) in enumerate(zip(range(first_level, first_level + levels), meshes, sols)):
        j = i + reference_offset
        ref = sols[j] if j < len(sols) else None
        table.add(lev, float(m.h), _ndofs(s), error_norms(s, case, ref))
    return table


@dataclass
class TSweepTable:
    scheme: str
    level: int
    rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def spread(self, name: str = "err_total_xt") -> float:
        c = self.column(name)
        return float(c.max() / c.min())

    def to_csv(self) -> str:
        cols = ["t", "h", "ndofs", "err_phi_h1", "err_w_h1", "err_zeta_xt", "err_total_xt"]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(cols)
        for r in self.rows:
            wr.writerow([_fmt(r[c]) for c in cols])
        return buf.getvalue()


def max_workers(n_tasks: int) -> int:
    env = os.environ.get("PLATEMIX_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def run_t_sweep(kind, t_list, level: int, n_holes: int = 1) -> TSweepTable:
    """Errors of the manufactured RM case versus ``t`` on one level.

    Cells are independent and run on up to ``PLATEMIX_THREADS`` workers; rows
    come back in the order of ``t_list``.
    """
    kind = SchemeKind.parse(kind)
    if kind.is_kirchhoff:
        raise ValueError("the t-sweep needs a Reissner-Mindlin scheme")

    def cell(t):
        case = make_rm_case(t)
        m = canonical_mesh(level, n_holes)
        sol = solve(m, case.problem(), kind)
        e = error_norms(sol, case)
        return {"t": float(t), "h": float(m.h), "ndofs": _ndofs(sol), **e.as_dict()}

    t_list = list(t_list)
    with ThreadPoolExecutor(max_workers=max_workers(len(t_list))) as ex:
        rows = list(ex.map(cell, t_list))
    return TSweepTable(kind.value, level, rows)


# ---------------------------------------------------------------------- invariants
def random_bubble_field(rng: np.random.Generator, degree: int = 2, n_holes: int = 1):
    """Random polynomial vector field times a bubble vanishing on the canonical boundary."""
    side, holes = canonical_domain(n_holes)
    lines_x = sorted({0.0, side, *[b[0] for b in holes], *[b[2] for b in holes]})
    lines_y = sorted({0.0, side, *[b[1] for b in holes], *[b[3] for b in holes]})
    exps = [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]
    cx, cy = rng.standard_normal(len(exps)), rng.standard_normal(len(exps))

    def field_(x, y):
        bub = np.prod([x - a for a in lines_x], axis=0) * np.prod([y - a for a in lines_y], axis=0)
        px = sum(c * x ** i * y ** j for c, (i, j) in zip(cx, exps))
        py = sum(c * x ** i * y ** j for c, (i, j) in zip(cy, exps))
        return (bub * px, bub * py)
    return field_


def commuting_defect(m: Mesh, v, which: str = "fortin") -> float:
    """``max_K |int_K rot(Pi v) - rot v| / max_K |int_K rot v|``.

    ``int_K rot v`` is the sum of signed tangential edge integrals over the
    boundary of ``K``; for ``Pi v`` it comes from the assembled moment matrix.
    """
    p0 = build_dofmap(m, SpaceKind.P0_MEANZERO)
    if which == "fortin":
        dm = build_dofmap(m, SpaceKind.BR_VEC)
        Pv = interpolate_fortin(v, dm)
    elif which == "rt":
        dm = build_dofmap(m, SpaceKind.RT_ROT)
        Pv = interpolate_rt(v, dm)
    else:
        raise ValueError("which is 'fortin' or 'rt'")
    moments_pi = assemble(dm, p0, "rot_times_p0").T @ Pv.coefficients
    # int_K rot v = sum over the edges of K of the outward-oriented tangential integral
    ti = edge_tangential_integrals(m, v, degree=ERROR_DEGREE)
    orient = np.sign(m.signed_areas)[:, None]
    moments_v = np.sum(ti[m.tri_edges] * m.tri_edge_sign * orient, axis=1)
    return float(np.abs(moments_pi - moments_v).max() / max(np.abs(moments_v).max(), 1e-300))


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def run_invariant_suite(levels: int = 3, n_fields: int = 5, seed: int = 0) -> list:
    """Mesh, exact-sequence and commuting checks on the canonical domains."""
    out = []
    rng = np.random.default_rng(seed)
    for holes in (1, 2):
        side, boxes = canonical_domain(holes)
        m = generate_square_hole_mesh(side, boxes, n=1)
        for lev in range(levels + 1):
            rep = validate(m)
            out.append(CheckResult(f"mesh J={holes} level={lev}", rep.ok, "; ".join(rep.violations)))
            if lev >= 1:
                ex = check_exact_sequence(m)
                out.append(CheckResult(f"exact sequence J={holes} level={lev}", ex.ok,
                                       "; ".join(ex.violations)))
            if lev < levels:
                m = refine(m, 1)
    m = canonical_mesh(min(levels, 2), 1)
    for k in range(n_fields):
        v = random_bubble_field(rng)
        for which in ("fortin", "rt"):
            d = commuting_defect(m, v, which)
            out.append(CheckResult(f"commuting {which} field {k}", d <= 1e-12, f"defect {d:.2e}"))
    return out

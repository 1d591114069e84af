"""Lowest-order finite element spaces on a :class:`~platemix.mesh.Mesh`.

Six space kinds are available:

=====================  ===================================================
``P1``                 continuous piecewise linears
``P1_zero``            ... vanishing on the whole boundary
``P1_hole_constant``   ... vanishing on ``Gamma_0`` and constant on each hole
``BR_vec``             rotated Bernardi-Raugel: vector P1 plus tangential
                       edge bubbles, vanishing on the boundary
``RT_rot``             rotated lowest-order Raviart-Thomas, ``u + v x^perp``,
                       zero tangential trace
``P0_meanzero``        piecewise constants (the zero-mean condition is a
                       constraint imposed by the schemes)
=====================  ===================================================

Local bases
-----------
Local edge ``i`` of a triangle runs from local vertex ``i+1`` to ``i+2``.
The local RT function of that edge is ``lam_j grad(lam_k) - lam_k grad(lam_j)``
and the local BR bubble is ``6/|e| lam_j lam_k t_e``; both have unit
tangential integral along the local orientation.  The global function equals
the local one times ``DofMap.cell_sign`` so that its tangential integral is
one along the global orientation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .mesh import Mesh
from .quadrature import edge_quadrature, quadrature


class SpaceKind(str, Enum):
    P1 = "P1"
    P1_ZERO = "P1_zero"
    P1_HOLE_CONSTANT = "P1_hole_constant"
    BR_VEC = "BR_vec"
    RT_ROT = "RT_rot"
    P0_MEANZERO = "P0_meanzero"

    @property
    def n_local(self) -> int:
        return {SpaceKind.BR_VEC: 9, SpaceKind.P0_MEANZERO: 1}.get(self, 3)

    @property
    def is_vector(self) -> bool:
        return self in (SpaceKind.BR_VEC, SpaceKind.RT_ROT)

    @property
    def is_p1(self) -> bool:
        return self in (SpaceKind.P1, SpaceKind.P1_ZERO, SpaceKind.P1_HOLE_CONSTANT)


# ---------------------------------------------------------------------- local bases
class Basis(NamedTuple):
    val: np.ndarray   # (T, nq, nloc) or (T, nq, nloc, 2)
    grad: np.ndarray  # (T, nq, nloc, 2) or (T, nq, nloc, 2, 2) with [..., a, b] = d_b v_a
    rot: np.ndarray | None  # (T, nq, nloc) for vector kinds


def barycentric_gradients(coords: np.ndarray):
    """Gradients of the barycentric coordinates and signed areas.

    ``coords`` has shape (T, 3, 2); returns (grads (T, 3, 2), areas (T,)).
    """
    x, y = coords[..., 0], coords[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    G = np.empty(coords.shape)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        G[:, i, 0] = (y[:, j] - y[:, k]) / area2
        G[:, i, 1] = (x[:, k] - x[:, j]) / area2
    return G, 0.5 * area2


def local_basis(coords: np.ndarray, bary: np.ndarray, kind: SpaceKind) -> Basis:
    """Evaluate the local basis of ``kind`` on triangles ``coords`` (T, 3, 2).

    ``bary`` is either a shared rule (nq, 3) or per-triangle points (T, nq, 3).
    """
    kind = SpaceKind(kind)
    coords = np.asarray(coords, dtype=float)
    T = coords.shape[0]
    G, _ = barycentric_gradients(coords)
    lam = np.broadcast_to(bary, (T,) + np.shape(bary)[-2:]) if np.ndim(bary) == 2 else np.asarray(bary)
    nq = lam.shape[1]

    if kind.is_p1:
        grad = np.broadcast_to(G[:, None, :, :], (T, nq, 3, 2))
        return Basis(np.array(lam), np.array(grad), None)
    if kind is SpaceKind.P0_MEANZERO:
        return Basis(np.ones((T, nq, 1)), np.zeros((T, nq, 1, 2)), None)

    if kind is SpaceKind.RT_ROT:
        val = np.empty((T, nq, 3, 2))
        grad = np.empty((T, nq, 3, 2, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            Gj, Gk = G[:, None, j, :], G[:, None, k, :]
            val[:, :, i, :] = lam[:, :, j, None] * Gk - lam[:, :, k, None] * Gj
            jac = np.einsum("ta,tb->tab", G[:, k], G[:, j]) - np.einsum("ta,tb->tab", G[:, j], G[:, k])
            grad[:, :, i] = jac[:, None]
        rot = grad[..., 1, 0] - grad[..., 0, 1]
        return Basis(val, grad, rot)

    # BR_VEC
    val = np.zeros((T, nq, 9, 2))
    grad = np.zeros((T, nq, 9, 2, 2))
    for i in range(3):
        for c in range(2):
            val[:, :, 2 * i + c, c] = lam[:, :, i]
            grad[:, :, 2 * i + c, c, :] = G[:, None, i, :]
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        d = coords[:, k] - coords[:, j]
        coef = 6.0 * d / np.einsum("ta,ta->t", d, d)[:, None]
        beta = lam[:, :, j] * lam[:, :, k]
        gbeta = lam[:, :, j, None] * G[:, None, k, :] + lam[:, :, k, None] * G[:, None, j, :]
        val[:, :, 6 + i, :] = beta[..., None] * coef[:, None, :]
        grad[:, :, 6 + i] = coef[:, None, :, None] * gbeta[:, :, None, :]
    rot = grad[..., 1, 0] - grad[..., 0, 1]
    return Basis(val, grad, rot)


# ---------------------------------------------------------------------- dof maps
@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of one space on one mesh.

    ``cell_to_global[K, i]`` is the global index of local basis function ``i``
    on triangle ``K`` or ``-1`` if that function is eliminated (boundary
    condition).  Hole vertices of ``P1_hole_constant`` all point at the same
    index, which ties their values together.  ``vertex_dof`` maps mesh
    vertices to dofs for the P1 kinds and to the first of the two component
    dofs for ``BR_vec``; ``edge_dof`` maps mesh edges to dofs for the
    edge-based kinds.
    """

    kind: SpaceKind
    mesh: Mesh
    n_dofs: int
    cell_to_global: np.ndarray
    cell_sign: np.ndarray
    vertex_dof: np.ndarray | None = None
    edge_dof: np.ndarray | None = None

    def __repr__(self):
        return f"DofMap({self.kind.value}, n_dofs={self.n_dofs})"


def _rank(mask: np.ndarray) -> np.ndarray:
    out = -np.ones(len(mask), dtype=np.int64)
    out[mask] = np.arange(int(mask.sum()))
    return out


def build_dofmap(m: Mesh, kind: SpaceKind) -> DofMap:
    """Deterministic dof numbering: vertices first, then edges, ascending index."""
    kind = SpaceKind(kind)
    cache = m.__dict__.setdefault("_dofmap_cache", {})
    if kind in cache:
        return cache[kind]
    T = m.n_triangles
    tri = m.triangles
    interior_v = m.vertex_tag < 0
    interior_e = m.edge_tag < 0

    if kind is SpaceKind.P1:
        vdof = np.arange(m.n_vertices, dtype=np.int64)
        dm = DofMap(kind, m, m.n_vertices, vdof[tri], np.ones((T, 3), np.int64), vertex_dof=vdof)
    elif kind in (SpaceKind.P1_ZERO, SpaceKind.P1_HOLE_CONSTANT):
        vdof = _rank(interior_v)
        n = int(interior_v.sum())
        if kind is SpaceKind.P1_HOLE_CONSTANT:
            hole = m.vertex_tag >= 1
            vdof[hole] = n + m.vertex_tag[hole] - 1
            n += m.n_boundary_components - 1
        dm = DofMap(kind, m, n, vdof[tri], np.ones((T, 3), np.int64), vertex_dof=vdof)
    elif kind is SpaceKind.RT_ROT:
        edof = _rank(interior_e)
        dm = DofMap(kind, m, int(interior_e.sum()), edof[m.tri_edges], m.tri_edge_sign.copy(),
                    edge_dof=edof)
    elif kind is SpaceKind.BR_VEC:
        vr = _rank(interior_v)
        nv = int(interior_v.sum())
        vdof = np.where(vr >= 0, 2 * vr, -1)
        er = _rank(interior_e)
        edof = np.where(er >= 0, 2 * nv + er, -1)
        c2g = np.empty((T, 9), dtype=np.int64)
        for i in range(3):
            base = vdof[tri[:, i]]
            c2g[:, 2 * i] = base
            c2g[:, 2 * i + 1] = np.where(base >= 0, base + 1, -1)
        c2g[:, 6:] = edof[m.tri_edges]
        sign = np.ones((T, 9), dtype=np.int64)
        sign[:, 6:] = m.tri_edge_sign
        dm = DofMap(kind, m, 2 * nv + int(interior_e.sum()), c2g, sign,
                    vertex_dof=vdof, edge_dof=edof)
    else:  # P0_MEANZERO
        dm = DofMap(kind, m, T, np.arange(T, dtype=np.int64)[:, None], np.ones((T, 1), np.int64))
    cache[kind] = dm
    return dm


# ---------------------------------------------------------------------- functions
def locate(m: Mesh, points: np.ndarray, tol: float = 1e-10):
    """Find a containing triangle and barycentric coordinates for each point."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    tree = m.__dict__.get("_centroid_tree")
    if tree is None:
        tree = cKDTree(m.coords.mean(axis=1))
        m.__dict__["_centroid_tree"] = tree
    k = min(12, m.n_triangles)
    _, cand = tree.query(pts, k=k)
    cand = np.asarray(cand).reshape(len(pts), k)
    tri = -np.ones(len(pts), dtype=np.int64)
    bary = np.zeros((len(pts), 3))
    for col in range(k):
        todo = np.flatnonzero(tri < 0)
        if not len(todo):
            break
        c = cand[todo, col]
        b = _bary(m.coords[c], pts[todo])
        ok = b.min(axis=1) >= -tol
        tri[todo[ok]] = c[ok]
        bary[todo[ok]] = b[ok]
    for p in np.flatnonzero(tri < 0):
        b = _bary(m.coords, np.broadcast_to(pts[p], (m.n_triangles, 2)))
        best = int(np.argmax(b.min(axis=1)))
        if b[best].min() < -1e-8:
            raise ValueError(f"point {pts[p]} lies outside the mesh")
        tri[p], bary[p] = best, b[best]
    return tri, bary


def _bary(coords: np.ndarray, pts: np.ndarray) -> np.ndarray:
    x0 = coords[:, 0]
    d1 = coords[:, 1] - x0
    d2 = coords[:, 2] - x0
    r = pts - x0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


@dataclass
class FieldFunction:
    """A finite element function: a dof map plus a coefficient vector."""

    dofmap: DofMap
    coefficients: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coefficients is None:
            self.coefficients = np.zeros(self.dofmap.n_dofs)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.dofmap.n_dofs,):
            raise ValueError(f"expected {self.dofmap.n_dofs} coefficients, "
                             f"got {self.coefficients.shape}")

    @property
    def kind(self) -> SpaceKind:
        return self.dofmap.kind

    @property
    def mesh(self) -> Mesh:
        return self.dofmap.mesh

    def local_coefficients(self, cells=None) -> np.ndarray:
        dm = self.dofmap
        c2g = dm.cell_to_global if cells is None else dm.cell_to_global[cells]
        sgn = dm.cell_sign if cells is None else dm.cell_sign[cells]
        vals = np.where(c2g >= 0, self.coefficients[np.maximum(c2g, 0)], 0.0)
        return vals * sgn

    def evaluate_local(self, bary, cells=None, what: str = "val") -> np.ndarray:
        """Evaluate on triangles ``cells`` at barycentric points ``bary``.

        ``what`` is one of ``"val"``, ``"grad"``, ``"rot"``.  Returns an array of
        shape (n_cells, nq[, ...]).
        """
        coords = self.mesh.coords if cells is None else self.mesh.coords[cells]
        basis = local_basis(coords, bary, self.kind)
        arr = getattr(basis, what)
        if arr is None:
            raise ValueError(f"{what!r} is not defined for {self.kind.value}")
        c = self.local_coefficients(cells)
        return np.einsum("tqi...,ti->tq...", arr, c)

    def evaluate(self, points, what: str = "val") -> np.ndarray:
        """Evaluate at arbitrary physical points, shape (n, ...)."""
        tri, bary = locate(self.mesh, points)
        out = self.evaluate_local(bary[:, None, :], tri, what)
        return out[:, 0]

    def __call__(self, x, y):
        pts = np.stack([np.ravel(x), np.ravel(y)], axis=1)
        v = self.evaluate(pts)
        if v.ndim == 2:
            return v.T.reshape((2,) + np.shape(x))
        return v.reshape(np.shape(x))

    # -------------------------------------------------------------- io
    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "n_dofs": self.dofmap.n_dofs,
                "coefficients": self.coefficients.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, mesh: Mesh) -> "FieldFunction":
        dm = build_dofmap(mesh, SpaceKind(data["kind"]))
        if dm.n_dofs != data["n_dofs"]:
            raise ValueError("n_dofs does not match the mesh")
        return cls(dm, np.asarray(data["coefficients"], dtype=float))

    @classmethod
    def from_json(cls, text: str, mesh: Mesh) -> "FieldFunction":
        return cls.from_dict(json.loads(text), mesh)


# ---------------------------------------------------------------------- sampling
def _sample(v, m: Mesh, bary: np.ndarray) -> np.ndarray:
    """Values of ``v`` at per-triangle barycentric points, shape (T, nq, ...).

    ``v`` is a callable ``v(x, y)`` (vector fields return a pair) or a
    :class:`FieldFunction` on any mesh covering ``m``.
    """
    if isinstance(v, FieldFunction) and v.mesh is m:
        return v.evaluate_local(bary)
    pts = np.einsum("tqi,tia->tqa", np.broadcast_to(bary, (m.n_triangles,) + bary.shape[-2:]), m.coords)
    if isinstance(v, FieldFunction):
        flat = v.evaluate(pts.reshape(-1, 2))
        return flat.reshape(pts.shape[:2] + flat.shape[1:])
    return call_field(v, pts[..., 0], pts[..., 1])


def call_field(v: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate a callable field; vector components end up in the last axis.

    Vector fields return a pair ``(vx, vy)`` (or an array with a leading axis
    of length two); scalar fields return one array.  Constants broadcast.
    """
    out = v(x, y)
    if isinstance(out, (tuple, list)):
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), x.shape) for c in out], axis=-1)
    out = np.asarray(out, dtype=float)
    if out.ndim == x.ndim + 1:
        return np.moveaxis(out, 0, -1)
    return np.broadcast_to(out, x.shape).copy()


def edge_tangential_integrals(m: Mesh, v, degree: int = 10) -> np.ndarray:
    """``int_e v . t_e ds`` for every mesh edge, global orientation.

    Finite element inputs are evaluated from one adjacent triangle, which is
    exact for fields with single-valued tangential traces.
    """
    s, w = edge_quadrature(degree)
    E = m.n_edges
    a = m.vertices[m.edges[:, 0]]
    b = m.vertices[m.edges[:, 1]]
    if isinstance(v, FieldFunction) and v.mesh is m:
        K = m.edge_tri[:, 0]
        tri = m.triangles[K]
        bary = np.zeros((E, len(s), 3))
        for loc in range(3):
            bary[:, :, loc] += np.where(tri[:, loc, None] == m.edges[:, 0, None], 1.0 - s[None], 0.0)
            bary[:, :, loc] += np.where(tri[:, loc, None] == m.edges[:, 1, None], s[None], 0.0)
        vals = v.evaluate_local(bary, K)  # (E, nq, 2)
    else:
        pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        if isinstance(v, FieldFunction):
            vals = v.evaluate(pts.reshape(-1, 2)).reshape(E, len(s), 2)
        else:
            vals = call_field(v, pts[..., 0], pts[..., 1])
    return np.einsum("eqa,q,ea->e", vals, w, b - a)


# ---------------------------------------------------------------------- operators
def gradient_matrix(scalar: DofMap, rt: DofMap) -> sp.csr_matrix:
    """RT coefficients of ``grad s`` for ``s`` in a P1 space.

    The tangential integral of a P1 gradient over an edge is the difference of
    its end values, so the matrix is a signed incidence matrix.
    """
    m = scalar.mesh
    e = np.flatnonzero(rt.edge_dof >= 0)
    rows, cols, vals = [], [], []
    for end, sgn in ((1, 1.0), (0, -1.0)):
        d = scalar.vertex_dof[m.edges[e, end]]
        ok = d >= 0
        rows.append(rt.edge_dof[e[ok]])
        cols.append(d[ok])
        vals.append(np.full(ok.sum(), sgn))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(rt.n_dofs, scalar.n_dofs))


def local_rt_interpolation(coords: np.ndarray) -> np.ndarray:
    """Local matrices (T, 3, 9) of the RT interpolant acting on BR functions.

    Row ``e`` holds the tangential integrals over local edge ``e`` (local
    orientation) of the nine local BR basis functions.
    """
    T = coords.shape[0]
    P = np.zeros((T, 3, 9))
    for e in range(3):
        j, k = (e + 1) % 3, (e + 2) % 3
        d = coords[:, k] - coords[:, j]  # |e| t_e
        for a in (j, k):
            P[:, e, 2 * a] = 0.5 * d[:, 0]
            P[:, e, 2 * a + 1] = 0.5 * d[:, 1]
        P[:, e, 6 + e] = 1.0
    return P


def rt_interpolation_matrix(br: DofMap, rt: DofMap) -> sp.csr_matrix:
    """Global matrix of the RT interpolant restricted to the BR space."""
    m = br.mesh
    P = local_rt_interpolation(m.coords)
    P = P * rt.cell_sign[:, :, None] * br.cell_sign[:, None, :]
    r = np.broadcast_to(rt.cell_to_global[:, :, None], P.shape)
    c = np.broadcast_to(br.cell_to_global[:, None, :], P.shape)
    ok = (r >= 0) & (c >= 0) & (P != 0)
    r, c, v = r[ok], c[ok], P[ok]
    # each (edge, dof) pair is seen from both neighbours with the same value
    key = r * br.n_dofs + c
    _, first = np.unique(key, return_index=True)
    return sp.csr_matrix((v[first], (r[first], c[first])), shape=(rt.n_dofs, br.n_dofs))


def interpolate_nodal(dm: DofMap, func: Callable) -> FieldFunction:
    """Nodal interpolant into a P1 kind; hole values are averaged."""
    if not dm.kind.is_p1:
        raise ValueError("nodal interpolation is defined for P1 kinds")
    m = dm.mesh
    vals = call_field(func, m.vertices[:, 0], m.vertices[:, 1])
    ok = dm.vertex_dof >= 0
    coef = np.bincount(dm.vertex_dof[ok], weights=vals[ok], minlength=dm.n_dofs)
    cnt = np.bincount(dm.vertex_dof[ok], minlength=dm.n_dofs)
    return FieldFunction(dm, coef / np.maximum(cnt, 1))


def interpolate_clement(v, br: DofMap, degree: int = 8) -> FieldFunction:
    """Clement quasi-interpolant into the vertex part of ``BR_vec``.

    The value at an interior vertex ``z`` is the vertex value of the L2
    projection of ``v`` onto linear polynomials over the patch of ``z``.
    Boundary values are zero; bubble coefficients are zero.
    """
    m = br.mesh
    rule = quadrature(degree)
    vals = _sample(v, m, rule.points)  # (T, nq, 2)
    pts = np.einsum("qi,tia->tqa", rule.points, m.coords)
    w = rule.weights[None, :] * m.areas[:, None]
    V = m.n_vertices
    M = np.zeros((V, 3, 3))
    rhs = np.zeros((V, 3, 2))
    for i in range(3):
        z = m.vertices[m.triangles[:, i]]
        phi = np.concatenate([np.ones(pts.shape[:2] + (1,)), pts - z[:, None, :]], axis=2)  # (T,nq,3)
        Mloc = np.einsum("tq,tqi,tqj->tij", w, phi, phi)
        rloc = np.einsum("tq,tqi,tqc->tic", w, phi, vals)
        np.add.at(M, m.triangles[:, i], Mloc)
        np.add.at(rhs, m.triangles[:, i], rloc)
    coef = np.zeros(br.n_dofs)
    iv = m.interior_vertices
    sol = np.linalg.solve(M[iv], rhs[iv])  # (n, 3, 2); row 0 is the vertex value
    d = br.vertex_dof[iv]
    coef[d] = sol[:, 0, 0]
    coef[d + 1] = sol[:, 0, 1]
    return FieldFunction(br, coef)


def interpolate_fortin(v, br: DofMap, degree: int = 10) -> FieldFunction:
    """Fortin interpolant into ``BR_vec``.

    Vertex values come from :func:`interpolate_clement`; each bubble
    coefficient restores the tangential integral of ``v`` over its edge.
    """
    m = br.mesh
    out = interpolate_clement(v, br)
    e = np.flatnonzero(br.edge_dof >= 0)
    target = edge_tangential_integrals(m, v, degree)[e]
    lo, hi = m.edges[e, 0], m.edges[e, 1]
    vert = np.zeros((m.n_vertices, 2))
    iv = m.interior_vertices
    vert[iv, 0] = out.coefficients[br.vertex_dof[iv]]
    vert[iv, 1] = out.coefficients[br.vertex_dof[iv] + 1]
    d = m.vertices[hi] - m.vertices[lo]
    linear_part = 0.5 * np.einsum("ea,ea->e", vert[lo] + vert[hi], d)
    out.coefficients[br.edge_dof[e]] = target - linear_part
    return out


def interpolate_rt(v, rt: DofMap, degree: int = 10) -> FieldFunction:
    """Canonical RT interpolant: dofs are tangential edge integrals of ``v``.

    ``BR_vec`` functions on the same mesh are mapped exactly through the local
    interpolation matrices.
    """
    m = rt.mesh
    if isinstance(v, FieldFunction) and v.mesh is m:
        if v.kind is SpaceKind.RT_ROT:
            return FieldFunction(rt, v.coefficients.copy())
        if v.kind is SpaceKind.BR_VEC:
            return FieldFunction(rt, rt_interpolation_matrix(v.dofmap, rt) @ v.coefficients)
    e = np.flatnonzero(rt.edge_dof >= 0)
    coef = np.zeros(rt.n_dofs)
    coef[rt.edge_dof[e]] = edge_tangential_integrals(m, v, degree)[e]
    return FieldFunction(rt, coef)


# ---------------------------------------------------------------------- exactness
@dataclass
class ExactSequenceReport:
    dim_rt: int
    dim_hole_constant: int
    dim_p0_meanzero: int
    rot_rank: int
    grad_rank: int
    kernel_residual: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _column_rank(A: np.ndarray, rtol: float = 1e-10) -> int:
    """Column rank of ``A``; full rank is certified by a Cholesky factor of ``A^T A``."""
    G = A.T @ A
    try:
        L = np.linalg.cholesky(G)
        if np.min(np.diag(L)) ** 2 > rtol * np.max(np.diag(G)):
            return A.shape[1]
    except np.linalg.LinAlgError:
        pass
    return int(np.linalg.matrix_rank(A))


def check_exact_sequence(m: Mesh, tol: float = 1e-12) -> ExactSequenceReport:
    """Verify the discrete sequence hole-constant P1 -> RT -> mean-zero P0.

    Checks the dimension count, surjectivity of ``rot`` onto mean-zero
    piecewise constants (rank ``T - 1`` of the assembled moment matrix),
    injectivity of ``grad`` and that assembled rot moments of discrete
    gradients vanish.
    """
    from .forms import assemble

    rt = build_dofmap(m, SpaceKind.RT_ROT)
    hc = build_dofmap(m, SpaceKind.P1_HOLE_CONSTANT)
    p0 = build_dofmap(m, SpaceKind.P0_MEANZERO)
    T = m.n_triangles
    report = ExactSequenceReport(rt.n_dofs, hc.n_dofs, T - 1, -1, -1, np.inf)
    out = report.violations
    if rt.n_dofs != hc.n_dofs + T - 1:
        out.append(f"dim RT={rt.n_dofs} != dim L_hC + dim P0_0 = {hc.n_dofs} + {T - 1}")
    R = assemble(rt, p0, "rot_times_p0").toarray()  # (n_rt, T)
    # constants span the kernel of rot moments; the rest must be injective
    report.rot_rank = _column_rank(R[:, :-1]) if T > 1 else 0
    if report.rot_rank != T - 1:
        out.append(f"rank of rot moments {report.rot_rank} != T-1={T - 1}")
    const_img = np.abs(R.sum(axis=1)).max() if R.size else 0.0
    if const_img > tol * max(1.0, np.abs(R).max()):
        out.append(f"rot image is not mean-zero (residual {const_img:.2e})")
    Gr = gradient_matrix(hc, rt).toarray()
    report.grad_rank = _column_rank(Gr) if Gr.size else 0
    if report.grad_rank != hc.n_dofs:
        out.append(f"grad is not injective on L_hC (rank {report.grad_rank} < {hc.n_dofs})")
    res = np.abs(R.T @ Gr).max() if Gr.size else 0.0
    scale = max(np.abs(R).max(), 1.0) * max(np.abs(Gr).max() if Gr.size else 1.0, 1.0)
    report.kernel_residual = float(res / scale)
    if report.kernel_residual > tol:
        out.append(f"rot(grad L_hC) residual {report.kernel_residual:.2e} > {tol}")
    return report

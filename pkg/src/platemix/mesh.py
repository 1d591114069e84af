"""Triangulations of polygonal domains with holes.

The mesh is stored as flat index arrays.  Everything except the vertex
coordinates and the triangle connectivity is derived on construction:

* ``edges`` -- vertex pairs ``(lo, hi)`` with ``lo < hi``; the global edge
  orientation (and the unit tangent ``t_e``) points from ``lo`` to ``hi``.
* ``tri_edges`` -- for each triangle, the edge opposite local vertex ``i``,
  i.e. the edge running from local vertex ``i+1`` to ``i+2``.
* ``tri_edge_sign`` -- ``+1`` where that local orientation agrees with the
  global one.
* ``vertex_tag`` / ``edge_tag`` -- ``-1`` for interior entities, otherwise the
  index ``k`` of the boundary component ``Gamma_k``.  Component 0 is the outer
  boundary (largest bounding box).

Examples
--------
>>> m = generate_square_hole_mesh(3, [(1, 1, 2, 2)], n=1)
>>> m.n_vertices, m.n_edges, m.n_triangles
(16, 32, 16)
>>> refine_uniform(m).n_triangles
64
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

MESH_FORMAT_VERSION = 1


class MeshError(ValueError):
    """Invalid mesh or domain description."""


@dataclass(frozen=True)
class Domain:
    """Outer polygon (counterclockwise) minus ``J`` polygonal holes (clockwise)."""

    outer_polygon: list
    holes: list = field(default_factory=list)

    @property
    def J(self) -> int:
        return len(self.holes)

    @classmethod
    def from_boxes(cls, outer_side: float, boxes=()) -> "Domain":
        """Square ``[0, outer_side]^2`` minus axis-aligned boxes ``(x0, y0, x1, y1)``."""
        L = float(outer_side)
        outer = [(0.0, 0.0), (L, 0.0), (L, L), (0.0, L)]
        holes = [[(x0, y0), (x0, y1), (x1, y1), (x1, y0)] for x0, y0, x1, y1 in boxes]
        return cls(outer, holes)


class Mesh:
    """Conforming triangulation with boundary-component bookkeeping.

    Parameters
    ----------
    vertices : array_like, shape (V, 2)
    triangles : array_like, shape (T, 3)
        Vertex indices, counterclockwise.
    n_holes : int, optional
        Number of holes ``J`` of the domain being meshed.  Inferred from the
        boundary topology when omitted.  :func:`validate` checks the Euler
        identity against this value.
    domain : Domain, optional
    """

    def __init__(self, vertices, triangles, n_holes: int | None = None,
                 domain: Domain | None = None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self.domain = domain
        self._build_topology()
        self.n_holes = self.n_boundary_components - 1 if n_holes is None else int(n_holes)

    # ------------------------------------------------------------------ topology
    def _build_topology(self):
        t = self.triangles
        V = len(self.vertices)
        # local edge i joins local vertices (i+1, i+2)
        loc = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)  # (T,3,2)
        lo = loc.min(axis=2)
        hi = loc.max(axis=2)
        keys = lo.ravel() * V + hi.ravel()
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        self.edges = np.stack([uniq // V, uniq % V], axis=1).astype(np.int64)
        self.tri_edges = inverse.reshape(-1, 3).astype(np.int64)
        self.tri_edge_sign = np.where(loc[:, :, 0] < loc[:, :, 1], 1, -1).astype(np.int64)
        self.edge_count = counts

        # edge -> adjacent triangles (second slot -1 on the boundary)
        E = len(self.edges)
        edge_tri = -np.ones((E, 2), dtype=np.int64)
        tri_ids = np.repeat(np.arange(len(t)), 3)
        flat = self.tri_edges.ravel()
        order = np.argsort(flat, kind="stable")
        sorted_edges = flat[order]
        first = np.ones(len(flat), dtype=bool)
        first[1:] = sorted_edges[1:] != sorted_edges[:-1]
        edge_tri[sorted_edges[first], 0] = tri_ids[order][first]
        edge_tri[sorted_edges[~first], 1] = tri_ids[order][~first]
        self.edge_tri = edge_tri

        bnd = counts == 1
        self.edge_tag = -np.ones(E, dtype=np.int64)
        self.vertex_tag = -np.ones(V, dtype=np.int64)
        self.n_boundary_components = 0
        if not bnd.any():
            return
        be = self.edges[bnd]
        graph = coo_matrix((np.ones(len(be)), (be[:, 0], be[:, 1])), shape=(V, V))
        _, labels = connected_components(graph, directed=False)
        comp_of_edge = labels[be[:, 0]]
        comps = np.unique(comp_of_edge)
        # order: outer boundary (largest bbox area) first, then by bbox corner
        info = []
        for c in comps:
            pts = self.vertices[np.unique(be[comp_of_edge == c])]
            lo_, hi_ = pts.min(axis=0), pts.max(axis=0)
            area = np.prod(hi_ - lo_)
            info.append((-area, lo_[0], lo_[1], c))
        info.sort()
        relabel = {c: k for k, (*_, c) in enumerate(info)}
        tags = np.array([relabel[c] for c in comp_of_edge], dtype=np.int64)
        self.edge_tag[bnd] = tags
        self.vertex_tag[be[:, 0]] = tags
        self.vertex_tag[be[:, 1]] = tags
        self.n_boundary_components = len(comps)

    # ------------------------------------------------------------------ sizes
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.vertex_tag < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tag < 0)

    @property
    def n_interior_vertices(self) -> int:
        return int(np.count_nonzero(self.vertex_tag < 0))

    @property
    def n_interior_edges(self) -> int:
        return int(np.count_nonzero(self.edge_tag < 0))

    # ------------------------------------------------------------------ geometry
    @cached_property
    def coords(self) -> np.ndarray:
        """Triangle vertex coordinates, shape (T, 3, 2)."""
        return self.vertices[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        c = self.coords
        d1 = c[:, 1] - c[:, 0]
        d2 = c[:, 2] - c[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def edge_tangents(self) -> np.ndarray:
        """Unit tangents ``t_e`` following the global (lo -> hi) orientation."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return d / self.edge_lengths[:, None]

    @property
    def h(self) -> float:
        """Mesh size (longest edge)."""
        return float(self.edge_lengths.max())

    def min_angle(self) -> float:
        """Smallest interior angle of all triangles, in radians."""
        c = self.coords
        angles = []
        for i in range(3):
            a = c[:, (i + 1) % 3] - c[:, i]
            b = c[:, (i + 2) % 3] - c[:, i]
            cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
        return float(np.min(angles))

    def __repr__(self):
        return (f"Mesh(V={self.n_vertices}, E={self.n_edges}, T={self.n_triangles}, "
                f"J={self.n_holes})")

    # ------------------------------------------------------------------ io
    def to_dict(self) -> dict:
        return {
            "version": MESH_FORMAT_VERSION,
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "n_holes": self.n_holes,
            "boundary_tags": {
                "vertex": self.vertex_tag.tolist(),
                "edges": self.edges[self.edge_tag >= 0].tolist(),
                "edge": self.edge_tag[self.edge_tag >= 0].tolist(),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mesh":
        version = data.get("version")
        if version != MESH_FORMAT_VERSION:
            raise MeshError(f"unsupported mesh format version {version!r}")
        m = cls(data["vertices"], data["triangles"], n_holes=data.get("n_holes"))
        tags = data.get("boundary_tags")
        if tags is not None and "vertex" in tags:
            if not np.array_equal(np.asarray(tags["vertex"]), m.vertex_tag):
                raise MeshError("stored boundary tags disagree with mesh topology")
        return m

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Mesh":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------- generation
def _check_aligned(value: float, n: int, what: str) -> int:
    k = value * n
    if abs(k - round(k)) > 1e-9:
        raise MeshError(f"{what}={value} is not aligned to the 1/{n} grid")
    return int(round(k))


def generate_square_hole_mesh(outer_side: float, hole_boxes: Sequence = (), n: int = 1) -> Mesh:
    """Structured triangulation of ``[0, L]^2`` minus axis-aligned boxes.

    Each grid square of width ``1/n`` is split by its bottom-left to top-right
    diagonal.

    Parameters
    ----------
    outer_side : float
        Side length ``L`` of the outer square; ``L * n`` must be an integer.
    hole_boxes : sequence of (x0, y0, x1, y1)
        Holes, aligned to the grid, strictly inside the square and pairwise
        separated.
    n : int
        Grid subdivisions per unit length.
    """
    if n < 1:
        raise MeshError("n must be a positive integer")
    N = _check_aligned(outer_side, n, "outer_side")
    if N < 1:
        raise MeshError("outer_side too small")
    boxes = []
    for box in hole_boxes:
        x0, y0, x1, y1 = (float(v) for v in box)
        i0, j0, i1, j1 = (_check_aligned(v, n, "hole coordinate") for v in (x0, y0, x1, y1))
        if not (i0 < i1 and j0 < j1):
            raise MeshError(f"degenerate hole box {box}")
        if i0 <= 0 or j0 <= 0 or i1 >= N or j1 >= N:
            raise MeshError(f"hole {box} touches or leaves the outer boundary")
        boxes.append((i0, j0, i1, j1))
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            p, q = boxes[a], boxes[b]
            separated = p[2] < q[0] or q[2] < p[0] or p[3] < q[1] or q[3] < p[1]
            if not separated:
                raise MeshError(f"holes {hole_boxes[a]} and {hole_boxes[b]} overlap or touch")

    ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    keep = np.ones(len(ii), dtype=bool)
    for i0, j0, i1, j1 in boxes:
        keep &= ~((ii >= i0) & (ii < i1) & (jj >= j0) & (jj < j1))
    ii, jj = ii[keep], jj[keep]

    def vid(i, j):
        return i + (N + 1) * j

    v00, v10, v11, v01 = vid(ii, jj), vid(ii + 1, jj), vid(ii + 1, jj + 1), vid(ii, jj + 1)
    tris = np.empty((2 * len(ii), 3), dtype=np.int64)
    tris[0::2] = np.stack([v00, v10, v11], axis=1)
    tris[1::2] = np.stack([v00, v11, v01], axis=1)

    gx, gy = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="xy")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1) / n
    used = np.unique(tris)
    renum = -np.ones(len(pts), dtype=np.int64)
    renum[used] = np.arange(len(used))

    L = float(outer_side)
    outer = [(0.0, 0.0), (L, 0.0), (L, L), (0.0, L)]
    holes = [[(i0 / n, j0 / n), (i0 / n, j1 / n), (i1 / n, j1 / n), (i1 / n, j0 / n)]
             for i0, j0, i1, j1 in boxes]
    return Mesh(pts[used], renum[tris], n_holes=len(boxes), domain=Domain(outer, holes))


def refine_uniform(m: Mesh) -> Mesh:
    """Red refinement: every triangle is split into four by its edge midpoints.

    The midpoint of edge ``e`` becomes vertex ``V + e``.
    """
    V = m.n_vertices
    mids = 0.5 * (m.vertices[m.edges[:, 0]] + m.vertices[m.edges[:, 1]])
    verts = np.vstack([m.vertices, mids])
    a, b, c = m.triangles.T
    # tri_edges[:, i] is opposite local vertex i
    m_bc, m_ca, m_ab = (V + m.tri_edges[:, i] for i in range(3))
    children = np.stack([
        np.stack([a, m_ab, m_ca], axis=1),
        np.stack([m_ab, b, m_bc], axis=1),
        np.stack([m_ca, m_bc, c], axis=1),
        np.stack([m_ab, m_bc, m_ca], axis=1),
    ], axis=1).reshape(-1, 3)
    return Mesh(verts, children, n_holes=m.n_holes, domain=m.domain)


def refine(m: Mesh, times: int) -> Mesh:
    for _ in range(times):
        m = refine_uniform(m)
    return m


# ---------------------------------------------------------------------- queries
def boundary_components(m: Mesh) -> list[list[int]]:
    """Ordered vertex cycles of the boundary components ``Gamma_0 .. Gamma_J``."""
    bnd = m.edge_tag >= 0
    be = m.edges[bnd]
    tags = m.edge_tag[bnd]
    cycles = []
    for k in range(m.n_boundary_components):
        ek = be[tags == k]
        nbrs: dict[int, list[int]] = {}
        for u, v in ek:
            nbrs.setdefault(int(u), []).append(int(v))
            nbrs.setdefault(int(v), []).append(int(u))
        if any(len(nb) != 2 for nb in nbrs.values()):
            raise MeshError(f"non-manifold boundary on component {k}")
        start = min(nbrs)
        cycle, prev, cur = [start], None, start
        while True:
            a, b = nbrs[cur]
            nxt = a if a != prev else b
            if nxt == start:
                break
            cycle.append(nxt)
            prev, cur = cur, nxt
        if len(cycle) != len(nbrs):
            raise MeshError(f"boundary component {k} is not a single cycle")
        cycles.append(cycle)
    return cycles


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(m: Mesh) -> ValidationReport:
    """Check every structural invariant of ``m``; never raises."""
    report = ValidationReport()
    out = report.violations
    V, E, T, J = m.n_vertices, m.n_edges, m.n_triangles, m.n_holes
    neg = np.flatnonzero(m.signed_areas <= 0)
    if len(neg):
        out.append(f"negative or zero area in {len(neg)} triangle(s), first {int(neg[0])}")
    bad = np.flatnonzero(m.edge_count > 2)
    if len(bad):
        out.append(f"{len(bad)} edge(s) shared by more than two triangles")
    if V - E + T != 1 - J:
        out.append(f"Euler mismatch: V-E+T={V - E + T}, expected 1-J={1 - J}")
    if m.n_boundary_components != J + 1:
        out.append(f"{m.n_boundary_components} boundary components, expected {J + 1}")
    E_int, V_int = m.n_interior_edges, m.n_interior_vertices
    if E_int != V_int + T + J - 1:
        out.append(f"interior count mismatch: E_int={E_int}, V_int+T+J-1={V_int + T + J - 1}")
    try:
        boundary_components(m)
    except MeshError as exc:
        out.append(str(exc))
    unused = np.setdiff1d(np.arange(V), m.triangles.ravel())
    if len(unused):
        out.append(f"{len(unused)} vertices not referenced by any triangle")
    return report

"""Block systems of the mixed, reduced, primal and comparison plate schemes.

Unknowns and test functions live in

=========  ==============================  ======================
``phi``    rotations                        ``BR_vec``
``zeta``   scaled shear                     ``RT_rot``
``omega``  deflection                       ``P1_zero``
``y``      multiplier of the gradient part  ``P1_hole_constant``
``p``      multiplier of the rot part       ``P0_meanzero``
``mean``   scalar multiplier for ``sum |K| p_K = 0``
=========  ==============================  ======================

The mixed Reissner-Mindlin system reads, for all test functions,

.. code-block:: text

    (C E(phi), E(psi))              + (psi, grad y)      + (rot psi, p)      = <f, psi>
            t^2 (zeta, eta)         + t^2 (eta, grad y)  + t^2 (rot eta, p)  = 0
                                    - (grad mu, grad y)                      = <g, mu>
    (phi, grad z) + t^2 (zeta, grad z) - (grad omega, grad z)               = 0
    (rot phi, q)  + t^2 (rot zeta, q)                                        = 0

The transverse load enters the ``mu`` row as ``+<g, mu>``; together with the
other rows this is the only sign that reproduces the strong form
``-div zeta = g`` and the equivalence with the primal scheme.  The reduced
variants replace ``psi`` by its RT interpolant in the ``(., grad y)`` pairing,
the Kirchhoff variants drop every ``zeta`` row and column.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp

from .forms import PlateMaterial, assemble, assemble_load, assemble_local, local_coupling
from .mesh import Mesh
from .solver import SolveReport, SolverError, solve_symmetric_indefinite
from .spaces import (DofMap, FieldFunction, SpaceKind, build_dofmap, gradient_matrix,
                     interpolate_rt, local_rt_interpolation, rt_interpolation_matrix)


class SchemeKind(str, Enum):
    RM_MIXED = "rm-mixed"
    RM_MIXED_REDUCED = "rm-reduced"
    RM_PRIMAL = "rm-primal"
    K_MIXED = "k-mixed"
    K_MIXED_REDUCED = "k-reduced"
    BFS_CHECK = "bfs-check"

    @classmethod
    def parse(cls, name) -> "SchemeKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip()
        for kind in cls:
            if key in (kind.value, kind.name, kind.name.lower()):
                return kind
        raise ValueError(f"unknown scheme {name!r}")

    @property
    def is_kirchhoff(self) -> bool:
        return self in (SchemeKind.K_MIXED, SchemeKind.K_MIXED_REDUCED)

    @property
    def is_reduced(self) -> bool:
        return self in (SchemeKind.RM_MIXED_REDUCED, SchemeKind.K_MIXED_REDUCED,
                        SchemeKind.RM_PRIMAL)


_KIRCHHOFF_LIMIT = {SchemeKind.RM_MIXED: SchemeKind.K_MIXED,
                    SchemeKind.RM_MIXED_REDUCED: SchemeKind.K_MIXED_REDUCED}


def _zero_vec(x, y):
    return (np.zeros_like(x), np.zeros_like(x))


def _zero(x, y):
    return np.zeros_like(x)


@dataclass
class PlateProblem:
    """Material data plus the moment load ``f`` (vector) and transverse load ``g``."""

    material: PlateMaterial = field(default_factory=PlateMaterial)
    load_f: Callable = _zero_vec
    load_g: Callable = _zero

    @property
    def t(self) -> float:
        return self.material.t

    def with_t(self, t: float) -> "PlateProblem":
        return dataclasses.replace(self, material=dataclasses.replace(self.material, t=t))


@dataclass(frozen=True)
class Field:
    """One unknown block of a system: a dof map, or ``None`` for a scalar."""

    name: str
    dofmap: DofMap | None
    size: int

    @property
    def kind(self) -> SpaceKind | None:
        return None if self.dofmap is None else self.dofmap.kind


@dataclass
class BlockSystem:
    """A symmetric block system with named blocks.

    ``blocks[(row, col)]`` holds the sparse block coupling test field ``row``
    with unknown ``col``; only nonzero blocks are stored.  ``matrix`` is the
    assembled CSR matrix in the order of ``layout``.
    """

    kind: SchemeKind
    mesh: Mesh
    problem: PlateProblem
    layout: list
    blocks: dict
    rhs: np.ndarray
    symmetric: bool = True
    _matrix: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def offsets(self) -> dict:
        out, start = {}, 0
        for f in self.layout:
            out[f.name] = slice(start, start + f.size)
            start += f.size
        return out

    @property
    def n(self) -> int:
        return sum(f.size for f in self.layout)

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            names = [f.name for f in self.layout]
            grid = [[self.blocks.get((r, c)) for c in names] for r in names]
            for i, f in enumerate(self.layout):  # keep bmat aware of every block size
                if grid[i][i] is None:
                    grid[i][i] = sp.csr_matrix((f.size, f.size))
            A = sp.bmat(grid, format="csr")
            A.sum_duplicates()
            A.sort_indices()
            self._matrix = A
        return self._matrix

    def field(self, name: str) -> Field:
        for f in self.layout:
            if f.name == name:
                return f
        raise KeyError(name)

    def split(self, x: np.ndarray) -> dict:
        return {name: x[s] for name, s in self.offsets.items()}

    def to_matrix_market(self, path, rhs_path=None):
        """Write the matrix (symmetric coordinate format) and optionally the rhs."""
        scipy.io.mmwrite(str(path), sp.coo_matrix(self.matrix), symmetry="symmetric",
                         comment=f"{self.kind.value} {self.layout_string()}")
        if rhs_path is not None:
            np.savetxt(rhs_path, self.rhs, fmt="%.17g")

    def layout_string(self) -> str:
        return " ".join(f"{f.name}:{f.size}" for f in self.layout)


@dataclass
class SolutionFields:
    """Discrete solution.

    ``zeta`` is absent for the Kirchhoff schemes and holds ``alpha`` for the
    comparison scheme.  ``p`` is a piecewise constant :class:`FieldFunction`
    and ``mean`` the value of the zero-mean multiplier.
    """

    kind: SchemeKind
    t: float
    phi: FieldFunction
    omega: FieldFunction
    zeta: FieldFunction | None = None
    y: FieldFunction | None = None
    p: FieldFunction | None = None
    mean: float = 0.0
    report: SolveReport | None = None

    @property
    def mesh(self) -> Mesh:
        return self.phi.mesh


# ---------------------------------------------------------------------- assembly
class _Spaces:
    def __init__(self, m: Mesh):
        self.br = build_dofmap(m, SpaceKind.BR_VEC)
        self.rt = build_dofmap(m, SpaceKind.RT_ROT)
        self.p1 = build_dofmap(m, SpaceKind.P1_ZERO)
        self.hc = build_dofmap(m, SpaceKind.P1_HOLE_CONSTANT)
        self.p0 = build_dofmap(m, SpaceKind.P0_MEANZERO)


def reduced_gradient_coupling(br: DofMap, hc: DofMap) -> sp.csr_matrix:
    """``(Pi^R psi, grad y)`` assembled from local RT interpolation matrices."""
    coords = br.mesh.coords
    P = local_rt_interpolation(coords)                          # (T, 3, 9)
    C = local_coupling(coords, SpaceKind.RT_ROT, hc.kind, "vec_dot_grad")  # (T, 3, 3)
    return assemble_local(br, hc, np.einsum("tei,tej->tij", P, C))


def _resolve_kind(kind, t: float) -> SchemeKind:
    kind = SchemeKind.parse(kind)
    if t < 0:
        raise ValueError("thickness must be non-negative")
    if t == 0:
        if kind in _KIRCHHOFF_LIMIT:
            return _KIRCHHOFF_LIMIT[kind]
        if kind in (SchemeKind.RM_PRIMAL, SchemeKind.BFS_CHECK):
            raise ValueError(f"{kind.value} requires t > 0")
    return kind


def assemble_scheme(m: Mesh, prob: PlateProblem, kind) -> BlockSystem:
    """Assemble the block system of ``kind`` on ``m``.

    ``t = 0`` turns the two mixed Reissner-Mindlin kinds into their Kirchhoff
    counterparts; the primal and comparison schemes need ``t > 0``.

    Raises
    ------
    ValueError
        Negative thickness, ``t = 0`` for a scheme that needs ``t > 0`` or a
        mesh without interior vertices ("insufficient resolution").
    """
    t = prob.t
    kind = _resolve_kind(kind, t)
    if m.n_interior_vertices == 0:
        raise ValueError("insufficient resolution: the mesh has no interior vertices; refine it")
    S = _Spaces(m)
    mat = prob.material
    A = assemble(S.br, S.br, "elasticity", mat)
    f = assemble_load(S.br, prob.load_f)
    g = assemble_load(S.p1, prob.load_g)

    if kind is SchemeKind.RM_PRIMAL:
        return _assemble_primal(m, prob, S, A, f, g)

    t2 = 0.0 if kind.is_kirchhoff else t * t
    Bpy = reduced_gradient_coupling(S.br, S.hc) if kind.is_reduced else \
        assemble(S.br, S.hc, "vec_dot_grad")
    Bpp = assemble(S.br, S.p0, "rot_times_p0")
    L = assemble(S.p1, S.hc, "grad_grad")
    area = sp.csr_matrix(m.areas[:, None])
    T = m.n_triangles

    layout = [Field("phi", S.br, S.br.n_dofs)]
    if not kind.is_kirchhoff:
        layout.append(Field("zeta", S.rt, S.rt.n_dofs))
    layout += [Field("omega", S.p1, S.p1.n_dofs), Field("y", S.hc, S.hc.n_dofs),
               Field("p", S.p0, T), Field("mean", None, 1)]
    rhs_parts = {"phi": f, "omega": g}

    if kind is SchemeKind.BFS_CHECK:
        # unknowns (phi, alpha, omega, y, p); the omega slot carries the
        # y-equation tested with mu and the z-test couples omega back
        M = assemble(S.rt, S.rt, "rt_mass")
        Bap = assemble(S.rt, S.p0, "rt_rot_p0")
        Kyy = assemble(S.hc, S.hc, "grad_grad")
        blocks = {
            ("phi", "phi"): A, ("phi", "y"): -Bpy, ("phi", "p"): -Bpp,
            ("zeta", "zeta"): t2 * M, ("zeta", "p"): -t2 * Bap,
            ("omega", "y"): L,
            ("y", "phi"): -Bpy.T.tocsr(), ("y", "omega"): L.T.tocsr(), ("y", "y"): -t2 * Kyy,
            ("p", "phi"): -Bpp.T.tocsr(), ("p", "zeta"): -t2 * Bap.T.tocsr(), ("p", "mean"): area,
            ("mean", "p"): area.T.tocsr(),
        }
    else:
        blocks = {
            ("phi", "phi"): A, ("phi", "y"): Bpy, ("phi", "p"): Bpp,
            ("omega", "y"): -L,
            ("y", "phi"): Bpy.T.tocsr(), ("y", "omega"): -L.T.tocsr(),
            ("p", "phi"): Bpp.T.tocsr(), ("p", "mean"): area,
            ("mean", "p"): area.T.tocsr(),
        }
        if not kind.is_kirchhoff:
            M = assemble(S.rt, S.rt, "rt_mass")
            Bzy = assemble(S.rt, S.hc, "vec_dot_grad")
            Bzp = assemble(S.rt, S.p0, "rt_rot_p0")
            blocks.update({
                ("zeta", "zeta"): t2 * M, ("zeta", "y"): t2 * Bzy, ("zeta", "p"): t2 * Bzp,
                ("y", "zeta"): t2 * Bzy.T.tocsr(), ("p", "zeta"): t2 * Bzp.T.tocsr(),
            })
    sys_ = BlockSystem(kind, m, prob, layout, blocks, np.zeros(sum(f.size for f in layout)))
    for name, vec in rhs_parts.items():
        sys_.rhs[sys_.offsets[name]] = vec
    return sys_


def _assemble_primal(m, prob, S, A, f, g) -> BlockSystem:
    t = prob.t
    if not t > 0:
        raise ValueError("rm-primal requires t > 0")
    M = assemble(S.rt, S.rt, "rt_mass")
    P = rt_interpolation_matrix(S.br, S.rt)
    G = gradient_matrix(S.p1, S.rt)
    s = 1.0 / (t * t)
    PM = (P.T @ M).tocsr()
    GM = (G.T @ M).tocsr()
    # products of rounded factors are only symmetric to roundoff; symmetrize
    App = A + s * (PM @ P)
    Aww = s * (GM @ G)
    Apw = (-s * (PM @ G)).tocsr()
    blocks = {
        ("phi", "phi"): (0.5 * (App + App.T)).tocsr(),
        ("phi", "omega"): Apw,
        ("omega", "phi"): Apw.T.tocsr(),
        ("omega", "omega"): (0.5 * (Aww + Aww.T)).tocsr(),
    }
    layout = [Field("phi", S.br, S.br.n_dofs), Field("omega", S.p1, S.p1.n_dofs)]
    rhs = np.concatenate([f, g])
    return BlockSystem(SchemeKind.RM_PRIMAL, m, prob, layout, blocks, rhs)


# ---------------------------------------------------------------------- solve
def solve_scheme(sys_: BlockSystem, tol: float = 1e-10, method: str = "auto") -> SolutionFields:
    """Solve an assembled system and unpack the fields.

    For the primal scheme the shear is recovered from ``(phi, omega)``.
    """
    rep = solve_symmetric_indefinite(sys_.matrix, sys_.rhs, tol=tol, method=method)
    x = sys_.split(rep.x)
    F = {f.name: f for f in sys_.layout}

    def ff(name):
        return FieldFunction(F[name].dofmap, x[name]) if name in F else None

    t = sys_.problem.t
    sol = SolutionFields(sys_.kind, 0.0 if sys_.kind.is_kirchhoff else t, ff("phi"), ff("omega"),
                         ff("zeta"), ff("y"), ff("p"),
                         float(x["mean"][0]) if "mean" in x else 0.0, rep)
    if sys_.kind is SchemeKind.RM_PRIMAL:
        sol.zeta = recover_shear(sol.phi, sol.omega, t)
    return sol


def solve(m: Mesh, prob: PlateProblem, kind, **kw) -> SolutionFields:
    """Assemble and solve in one call."""
    return solve_scheme(assemble_scheme(m, prob, kind), **kw)


def recover_shear(phi: FieldFunction, omega: FieldFunction, t: float) -> FieldFunction:
    """``t^-2 (grad omega - Pi^R phi)`` as an RT function, computed edge by edge."""
    if not t > 0:
        raise ValueError("shear recovery needs t > 0")
    rt = build_dofmap(phi.mesh, SpaceKind.RT_ROT)
    grad_w = gradient_matrix(omega.dofmap, rt) @ omega.coefficients
    pi_phi = interpolate_rt(phi, rt).coefficients
    return FieldFunction(rt, (grad_w - pi_phi) / (t * t))


# ---------------------------------------------------------------------- comparison
@dataclass
class BFSReport:
    """Relative gaps between the mixed and the comparison solutions.

    ``alpha`` measures ``alpha_BFS - (grad y + zeta)`` in L2; ``alpha_printed``
    measures the variant ``alpha_BFS - (grad y - zeta)`` for reference.
    """

    t: float
    phi: float
    omega: float
    y: float
    p: float
    alpha: float
    alpha_printed: float = float("nan")

    @property
    def gaps(self) -> dict:
        return {"phi": self.phi, "omega": self.omega, "y": self.y, "p": self.p,
                "alpha": self.alpha}


def _rel(num: float, den: float) -> float:
    return float(num / den) if den > 0 else float(num)


def bfs_cross_check(m: Mesh, prob: PlateProblem, t: float | None = None) -> BFSReport:
    """Solve the mixed and the comparison scheme and report the relation gaps.

    Gaps are ``||phi - phi_B||_1``, ``||omega - omega_B||_1``,
    ``||y + y_B||_1``, ``||p + p_B||_0`` and ``||alpha_B - grad y - zeta||_0``,
    each divided by the norm of the corresponding mixed field.
    """
    if t is not None:
        prob = prob.with_t(t)
    if not prob.t > 0:
        raise ValueError("bfs_cross_check needs t > 0")
    a = solve(m, prob, SchemeKind.RM_MIXED)
    b = solve(m, prob, SchemeKind.BFS_CHECK)
    S = _Spaces(m)
    K1v = assemble(S.br, S.br, "mass_vec") + assemble(S.br, S.br, "grad_grad")
    K1s = assemble(S.p1, S.p1, "mass") + assemble(S.p1, S.p1, "grad_grad")
    K1h = assemble(S.hc, S.hc, "mass") + assemble(S.hc, S.hc, "grad_grad")
    Mrt = assemble(S.rt, S.rt, "rt_mass")

    def nrm(K, v):
        return float(np.sqrt(max(v @ (K @ v), 0.0)))

    def pnorm(v):
        return float(np.sqrt(np.sum(m.areas * v * v)))

    G = gradient_matrix(S.hc, S.rt)
    target = G @ a.y.coefficients + a.zeta.coefficients
    printed = G @ a.y.coefficients - a.zeta.coefficients
    alpha = b.zeta.coefficients
    return BFSReport(
        t=prob.t,
        phi=_rel(nrm(K1v, a.phi.coefficients - b.phi.coefficients), nrm(K1v, a.phi.coefficients)),
        omega=_rel(nrm(K1s, a.omega.coefficients - b.omega.coefficients),
                   nrm(K1s, a.omega.coefficients)),
        y=_rel(nrm(K1h, a.y.coefficients + b.y.coefficients), nrm(K1h, a.y.coefficients)),
        p=_rel(pnorm(a.p.coefficients + b.p.coefficients), pnorm(a.p.coefficients)),
        alpha=_rel(nrm(Mrt, alpha - target), nrm(Mrt, target)),
        alpha_printed=_rel(nrm(Mrt, alpha - printed), nrm(Mrt, printed)),
    )


__all__ = [
    "SchemeKind", "PlateProblem", "Field", "BlockSystem", "SolutionFields", "BFSReport",
    "assemble_scheme", "solve_scheme", "solve", "recover_shear", "bfs_cross_check",
    "reduced_gradient_coupling", "SolverError",
]

"""Material law, local element matrices and global assembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import QuadratureRule, quadrature
from .spaces import DofMap, SpaceKind, call_field, local_basis

__all__ = [
    "PlateMaterial", "QuadratureRule", "quadrature", "apply_C", "local_elasticity",
    "local_coupling", "assemble", "assemble_local", "assemble_load", "FORM_TAGS",
]

DEFAULT_DEGREE = 4
LOAD_DEGREE = 16


@dataclass(frozen=True)
class PlateMaterial:
    """Young modulus ``E``, Poisson ratio ``nu``, shear scale ``lam`` and thickness ``t``.

    The shear scale is carried for completeness; every scheme uses ``lam = 1``.
    """

    E: float = 1.0
    nu: float = 0.3
    lam: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not (0.0 <= self.nu <= 0.5 - 1e-6):
            raise ValueError("nu must lie in [0, 0.5 - 1e-6]")
        if self.t < 0:
            raise ValueError("thickness must be non-negative")

    @property
    def bending_stiffness(self) -> float:
        return self.E / (12.0 * (1.0 - self.nu ** 2))


def apply_C(tau, mat: PlateMaterial) -> np.ndarray:
    """Bending law ``E/(12(1-nu^2)) [(1-nu) tau + nu tr(tau) I]`` on (..., 2, 2) tensors."""
    tau = np.asarray(tau, dtype=float)
    tr = tau[..., 0, 0] + tau[..., 1, 1]
    out = (1.0 - mat.nu) * tau
    out[..., 0, 0] += mat.nu * tr
    out[..., 1, 1] += mat.nu * tr
    return mat.bending_stiffness * out


def _as_cells(coords):
    coords = np.asarray(coords, dtype=float)
    single = coords.ndim == 2
    return (coords[None] if single else coords), single


def local_elasticity(coords, mat: PlateMaterial, degree: int = DEFAULT_DEGREE) -> np.ndarray:
    """``int_K C eps(phi_i) : eps(phi_j)`` over the nine local BR functions.

    ``coords`` is one triangle (3, 2) or a stack (T, 3, 2).
    """
    cells, single = _as_cells(coords)
    if np.any(np.abs(_areas(cells)) < 1e-14):
        raise ValueError("degenerate triangle")
    rule = quadrature(degree)
    b = local_basis(cells, rule.points, SpaceKind.BR_VEC)
    eps = 0.5 * (b.grad + np.swapaxes(b.grad, -1, -2))
    w = rule.weights[None, :] * np.abs(_areas(cells))[:, None]
    A = np.einsum("tq,tqiab,tqjab->tij", w, apply_C(eps, mat), eps)
    return A[0] if single else A


def _areas(cells):
    d1 = cells[:, 1] - cells[:, 0]
    d2 = cells[:, 2] - cells[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


FORM_TAGS = ("mass", "mass_vec", "grad_grad", "vec_dot_grad", "rot_times_p0",
             "rt_mass", "rt_rot_p0", "rot_rot")


def local_coupling(coords, row_space, col_space, form_tag: str,
                   degree: int = DEFAULT_DEGREE) -> np.ndarray:
    """Local matrices ``(T, n_row_local, n_col_local)`` of a bilinear form.

    Entry ``[K, i, j]`` is the form evaluated at (column function ``j``,
    row function ``i``) on triangle ``K``:

    ``mass``          scalar ``(u, v)``
    ``mass_vec``      vector ``(u, v)``
    ``grad_grad``     ``(grad u, grad v)`` (full Jacobian for vectors)
    ``vec_dot_grad``  ``(v, grad s)``, vector rows, scalar columns
    ``rot_times_p0``  ``(rot v, q)``, vector rows, piecewise-constant columns
    ``rt_mass``       ``mass_vec`` restricted to RT x RT
    ``rt_rot_p0``     ``rot_times_p0`` with RT rows
    ``rot_rot``       ``(rot u, rot v)``
    """
    row_space, col_space = SpaceKind(row_space), SpaceKind(col_space)
    if form_tag not in FORM_TAGS:
        raise ValueError(f"unknown form tag {form_tag!r}")
    if form_tag == "rt_mass":
        if row_space is not SpaceKind.RT_ROT or col_space is not SpaceKind.RT_ROT:
            raise ValueError("rt_mass needs RT rows and columns")
        form_tag = "mass_vec"
    if form_tag == "rt_rot_p0":
        if row_space is not SpaceKind.RT_ROT:
            raise ValueError("rt_rot_p0 needs RT rows")
        form_tag = "rot_times_p0"
    vec_r, vec_c = row_space.is_vector, col_space.is_vector
    need = {
        "mass": (False, False), "mass_vec": (True, True), "grad_grad": (vec_r, vec_r),
        "vec_dot_grad": (True, False), "rot_times_p0": (True, False), "rot_rot": (True, True),
    }[form_tag]
    if (vec_r, vec_c) != need or (form_tag == "grad_grad" and vec_r != vec_c):
        raise ValueError(f"{form_tag} is not defined for {row_space.value} x {col_space.value}")
    if form_tag == "rot_times_p0" and col_space is not SpaceKind.P0_MEANZERO:
        raise ValueError("rot_times_p0 needs piecewise-constant columns")

    cells, _ = _as_cells(coords)
    rule = quadrature(degree)
    br = local_basis(cells, rule.points, row_space)
    bc = local_basis(cells, rule.points, col_space)
    w = rule.weights[None, :] * np.abs(_areas(cells))[:, None]
    if form_tag in ("mass", "mass_vec", "grad_grad"):
        a, b = (br.val, bc.val) if form_tag != "grad_grad" else (br.grad, bc.grad)
        a = a.reshape(a.shape[:3] + (-1,))
        b = b.reshape(b.shape[:3] + (-1,))
        return np.einsum("tq,tqix,tqjx->tij", w, a, b)
    if form_tag == "vec_dot_grad":
        return np.einsum("tq,tqia,tqja->tij", w, br.val, bc.grad)
    if form_tag == "rot_times_p0":
        return np.einsum("tq,tqi,tqj->tij", w, br.rot, bc.val)
    return np.einsum("tq,tqi,tqj->tij", w, br.rot, bc.rot)


def assemble_local(row: DofMap, col: DofMap, local: np.ndarray) -> sp.csr_matrix:
    """Scatter local matrices into a global CSR matrix.

    Eliminated dofs are dropped, tied dofs are summed and the edge sign flips
    of both dof maps are applied.
    """
    if row.mesh is not col.mesh:
        raise ValueError("dof maps live on different meshes")
    T = row.mesh.n_triangles
    if local.shape != (T, row.kind.n_local, col.kind.n_local):
        raise ValueError(f"local matrix shape {local.shape} does not match the dof maps")
    vals = local * row.cell_sign[:, :, None] * col.cell_sign[:, None, :]
    r = np.broadcast_to(row.cell_to_global[:, :, None], vals.shape)
    c = np.broadcast_to(col.cell_to_global[:, None, :], vals.shape)
    ok = (r >= 0) & (c >= 0)
    A = sp.coo_matrix((vals[ok], (r[ok], c[ok])), shape=(row.n_dofs, col.n_dofs)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble(row: DofMap, col: DofMap, form: str, mat: PlateMaterial | None = None,
             degree: int = DEFAULT_DEGREE) -> sp.csr_matrix:
    """Assemble ``form`` (a tag of :func:`local_coupling` or ``"elasticity"``)."""
    coords = row.mesh.coords
    if form == "elasticity":
        if row.kind is not SpaceKind.BR_VEC or col.kind is not SpaceKind.BR_VEC:
            raise ValueError("elasticity is assembled on BR_vec")
        local = local_elasticity(coords, mat or PlateMaterial(), degree)
    else:
        local = local_coupling(coords, row.kind, col.kind, form, degree)
    return assemble_local(row, col, local)


def assemble_load(dm: DofMap, func, degree: int = LOAD_DEGREE) -> np.ndarray:
    """Load vector ``int f . phi_i`` (vector spaces) or ``int f phi_i`` (scalar)."""
    m = dm.mesh
    rule = quadrature(degree)
    pts = np.einsum("qi,tia->tqa", rule.points, m.coords)
    vals = call_field(func, pts[..., 0], pts[..., 1])
    b = local_basis(m.coords, rule.points, dm.kind)
    w = rule.weights[None, :] * m.areas[:, None]
    if dm.kind.is_vector:
        local = np.einsum("tq,tqia,tqa->ti", w, b.val, vals)
    else:
        local = np.einsum("tq,tqi,tq->ti", w, b.val, vals)
    local = local * dm.cell_sign
    ok = dm.cell_to_global >= 0
    return np.bincount(dm.cell_to_global[ok], weights=local[ok], minlength=dm.n_dofs)

"""Direct solves of symmetric indefinite systems and inf-sup estimation."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import assemble
from .mesh import Mesh
from .spaces import SpaceKind, build_dofmap

DENSE_LIMIT = 5000


class SolverError(RuntimeError):
    """Factorization breakdown or residual tolerance not met."""


@dataclass
class SolveReport:
    x: np.ndarray
    residual: float
    method: str
    nnz: int = 0
    fill: float = 0.0
    refinement_steps: int = 0
    wall_time: float = 0.0


def _check_symmetric(A: sp.spmatrix, tol: float = 1e-12):
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix is not square: {A.shape}")
    scale = abs(A).max() if A.nnz else 0.0
    asym = abs(A - A.T).max() if A.nnz else 0.0
    if asym > tol * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.2e})")


def _residual(A: sp.csr_matrix, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``A x - b`` accumulated in extended precision, rounded to double."""
    prod = A.data.astype(np.longdouble) * x.astype(np.longdouble)[A.indices]
    Ax = np.add.reduceat(prod, A.indptr[:-1]) if len(prod) else np.zeros(A.shape[0], np.longdouble)
    Ax[np.diff(A.indptr) == 0] = 0
    return (Ax - b.astype(np.longdouble)).astype(float)


def solve_symmetric_indefinite(A, b, tol: float = 1e-10, method: str = "auto",
                               max_refine: int = 3) -> SolveReport:
    """Solve ``A x = b`` for symmetric, possibly indefinite ``A``.

    The matrix is symmetrically equilibrated by its row maxima.  ``method`` is
    ``"sparse"`` (SuperLU with partial pivoting), ``"dense"`` (LU with partial
    pivoting, only for ``n <= 5000``) or ``"auto"``, which tries the sparse path first
    and falls back to the dense one.  A few steps of iterative refinement are
    applied until ``||A x - b|| / ||b|| <= tol``; residuals are accumulated in
    extended precision so that the measurement is not limited by its own
    rounding for strongly scaled systems.

    Raises
    ------
    SolverError
        On a structurally or numerically singular matrix or when the residual
        stays above ``tol``.
    """
    t0 = time.perf_counter()
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    _check_symmetric(A)
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveReport(np.zeros(n), 0.0, "trivial", A.nnz, wall_time=time.perf_counter() - t0)

    rowmax = np.asarray(abs(A).max(axis=1).todense()).ravel()
    if np.any(rowmax == 0):
        raise SolverError(f"structurally singular matrix: {int(np.sum(rowmax == 0))} empty rows")
    d = 1.0 / np.sqrt(rowmax)
    As = sp.diags(d) @ A @ sp.diags(d)

    solve, used, fill = None, None, 0.0
    if method in ("auto", "sparse"):
        try:
            lu = spla.splu(As.tocsc())
            solve, used = lu.solve, "sparse"
            fill = (lu.L.nnz + lu.U.nnz) / max(A.nnz, 1)
        except RuntimeError as exc:
            if method == "sparse" or n > DENSE_LIMIT:
                raise SolverError(f"sparse factorization failed: {exc}") from exc
    if solve is None:
        if method not in ("auto", "dense"):
            raise ValueError(f"unknown method {method!r}")
        if n > DENSE_LIMIT:
            raise SolverError(f"dense path limited to n <= {DENSE_LIMIT}, got {n}")
        Ad = As.toarray()
        try:
            with warnings.catch_warnings():  # singularity is reported below as SolverError
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu_piv = sla.lu_factor(Ad, check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise SolverError(f"dense factorization failed: {exc}") from exc
        if np.any(np.diag(lu_piv[0]) == 0):
            raise SolverError("matrix is singular")
        solve, used, fill = (lambda r: sla.lu_solve(lu_piv, r)), "dense", n * n / max(A.nnz, 1)

    x = d * solve(d * b)
    r = _residual(A, x, b)
    res = np.linalg.norm(r) / bnorm
    steps = 0
    while res > tol * 1e-2 and steps < max_refine:
        x_new = x - d * solve(d * r)
        r_new = _residual(A, x_new, b)
        res_new = np.linalg.norm(r_new) / bnorm
        steps += 1
        if not res_new < res:
            break
        x, r, res = x_new, r_new, res_new
    if not np.all(np.isfinite(x)):
        raise SolverError("factorization produced non-finite values (singular matrix)")
    if res > tol:
        raise SolverError(f"relative residual {res:.2e} exceeds tolerance {tol:.0e}")
    return SolveReport(x, float(res), used, A.nnz, fill, steps, time.perf_counter() - t0)


# ---------------------------------------------------------------------- inf-sup
@dataclass
class InfSupEstimate:
    """Discrete inf-sup constant of the constraint form and its context."""

    beta: float
    t: float
    level: int | None = None
    residual: float = 0.0
    n_primal: int = 0
    n_multiplier: int = 0
    extra: dict = field(default_factory=dict)


def _mean_zero_basis(weights: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``{q : weights . q = 0}`` as a dense (T, T-1) array."""
    return sla.null_space(weights[None, :])


def estimate_infsup(m: Mesh, t: float, level: int | None = None,
                    max_dofs: int = 6000) -> InfSupEstimate:
    """Inf-sup constant of ``b_t`` on ``BR x RT x P1_0`` against ``L_hC x P0_0``.

    ``b_t((psi, eta, mu), (z, q)) = (psi + t^2 eta - grad mu, grad z)
    + (rot(psi + t^2 eta), q)``.  The primal space carries the norm
    ``||psi||_1^2 + t^2 ||eta||_0^2 + t^4 ||rot eta||_0^2 + ||mu||_1^2`` and the
    multiplier space ``||grad z||_0^2 + ||q||_0^2`` restricted to mean-zero
    ``q``.  Returns ``beta = sqrt(lambda_min)`` of ``B X^-1 B^T q = lambda M q``
    computed densely.
    """
    if not t > 0:
        raise ValueError("inf-sup estimation needs t > 0")
    br = build_dofmap(m, SpaceKind.BR_VEC)
    rt = build_dofmap(m, SpaceKind.RT_ROT)
    p1 = build_dofmap(m, SpaceKind.P1_ZERO)
    hc = build_dofmap(m, SpaceKind.P1_HOLE_CONSTANT)
    p0 = build_dofmap(m, SpaceKind.P0_MEANZERO)
    if p1.n_dofs == 0:
        raise ValueError("insufficient resolution: the mesh has no interior vertices")
    n_primal = br.n_dofs + rt.n_dofs + p1.n_dofs
    if n_primal > max_dofs:
        raise ValueError(f"problem too large for the dense estimator ({n_primal} > {max_dofs})")
    t2 = t * t

    # B has multiplier rows (z, q) and primal columns (psi, eta, mu)
    Bz = [assemble(br, hc, "vec_dot_grad").T, t2 * assemble(rt, hc, "vec_dot_grad").T,
          -assemble(p1, hc, "grad_grad").T]
    Bq = [assemble(br, p0, "rot_times_p0").T, t2 * assemble(rt, p0, "rt_rot_p0").T, None]
    gram = [
        assemble(br, br, "mass_vec") + assemble(br, br, "grad_grad"),
        t2 * assemble(rt, rt, "rt_mass") + t2 * t2 * assemble(rt, rt, "rot_rot"),
        assemble(p1, p1, "mass") + assemble(p1, p1, "grad_grad"),
    ]
    Z = _mean_zero_basis(m.areas)
    rows = [np.hstack([b.toarray() for b in Bz]),
            np.hstack([(b.toarray() if b is not None else np.zeros((m.n_triangles, p1.n_dofs)))
                       for b in Bq])]
    B = np.vstack([rows[0], Z.T @ rows[1]])

    # S = B X^-1 B^T with X block diagonal
    S = np.zeros((B.shape[0], B.shape[0]))
    start = 0
    for G in gram:
        n = G.shape[0]
        L = sla.cho_factor(G.toarray(), lower=True)
        Bb = B[:, start:start + n]
        S += Bb @ sla.cho_solve(L, Bb.T)
        start += n
    S = 0.5 * (S + S.T)
    Mz = assemble(hc, hc, "grad_grad").toarray()
    Mq = Z.T @ (m.areas[:, None] * Z)
    M = sla.block_diag(Mz, Mq)
    lam, vec = sla.eigh(S, M, subset_by_index=[0, 0])
    v = vec[:, 0]
    r = np.linalg.norm(S @ v - lam[0] * (M @ v)) / max(np.linalg.norm(S @ v), 1e-300)
    beta = float(np.sqrt(max(lam[0], 0.0)))
    return InfSupEstimate(beta, float(t), level, float(r), n_primal, B.shape[0])

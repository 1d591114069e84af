"""Quadrature on triangles and edges."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 40


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference triangle.

    ``points`` are barycentric triples and ``weights`` sum to one; multiply by
    the triangle area when integrating.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def quadrature(degree: int) -> QuadratureRule:
    """Collapsed (conical product) Gauss rule exact to total ``degree``."""
    degree = int(degree)
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree}")
    n = max(1, (degree + 2) // 2)
    s, ws = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (s + 1.0)
    wu = 0.25 * ws
    r, wr = np.polynomial.legendre.leggauss(n)
    v = 0.5 * (r + 1.0)
    wv = 0.5 * wr
    U, Vv = np.meshgrid(u, v, indexing="ij")
    x = U.ravel()
    y = ((1.0 - U) * Vv).ravel()
    w = np.outer(wu, wv).ravel() * 2.0  # reference area is 1/2
    pts = np.stack([1.0 - x - y, x, y], axis=1)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int):
    """Gauss-Legendre rule on ``[0, 1]``: (points, weights summing to one)."""
    n = max(1, (int(degree) + 2) // 2)
    r, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (r + 1.0), 0.5 * w

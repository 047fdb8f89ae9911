"""Quadrature rules and small dense linear algebra shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "tensor_rule",
    "null_space",
    "least_squares_fit",
    "DEFAULT_REL_TOL",
]

DEFAULT_REL_TOL = 1e-9


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    nodes: np.ndarray    # (n,) in 1D, (n, 2) in 2D
    weights: np.ndarray  # (n,), positive
    order: int           # polynomial exactness degree


@lru_cache(maxsize=128)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n_points: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """Gauss-Legendre rule on [a, b]; exact to degree 2*n_points - 1."""
    a, b = float(interval[0]), float(interval[1])
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if not a < b:
        raise ValueError("need a < b")
    x, w = _leggauss(n_points)
    half = 0.5 * (b - a)
    return QuadratureRule(1, a + half * (x + 1.0), half * w, 2 * n_points - 1)


def tensor_rule(rx: QuadratureRule, ry: QuadratureRule) -> QuadratureRule:
    if rx.dim != 1 or ry.dim != 1:
        raise ValueError("tensor_rule takes two 1D rules")
    X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(rx.weights, ry.weights).ravel()
    return QuadratureRule(2, nodes, weights, min(rx.order, ry.order))


def null_space(A: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of A.

    Singular values s <= rel_tol * s_max count as zero; a zero matrix yields
    the full space.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must lie in (0, 1)")
    n = A.shape[1]
    if A.size == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(A)
    s_max = s[0] if s.size else 0.0
    if s_max == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > rel_tol * s_max))
    return vh[rank:].T.copy()


def least_squares_fit(basis_samples: np.ndarray, target_samples: np.ndarray,
                      weights: np.ndarray | None = None,
                      rel_tol: float = DEFAULT_REL_TOL):
    """Weighted least squares via SVD pseudo-inverse.

    Minimizes sum_i w_i (B_ij c_j - t_i)^2; returns the minimal-norm
    coefficient vector and the achieved weighted residual norm
    sqrt(sum_i w_i r_i^2).  Rank deficiency is handled with the same
    singular-value cutoff policy as null_space.
    """
    B = np.asarray(basis_samples, dtype=float)
    t = np.asarray(target_samples, dtype=float).ravel()
    if B.ndim == 1:
        B = B.reshape(-1, 1) if B.size == t.size else B.reshape(t.size, -1)
    if B.shape[0] != t.size:
        raise ValueError("sample count mismatch")
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=float).ravel()
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    sw = np.sqrt(w)
    if B.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(sw * t))
    Bw = B * sw[:, None]
    tw = sw * t
    u, s, vh = np.linalg.svd(Bw, full_matrices=False)
    s_max = s[0] if s.size else 0.0
    inv = np.where(s > rel_tol * s_max, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    coeffs = vh.T @ (inv * (u.T @ tw))
    resid = float(np.linalg.norm(Bw @ coeffs - tw))
    return coeffs, resid

"""Dense multivariate polynomials in 1 or 2 variables about an expansion center.

Coefficients are stored against shifted monomials ``(x - x0)^i (y - y0)^j``;
all algebra (evaluation, differentiation) is exact up to rounding.  Monomial
bases are emitted in graded-lexicographic order (degree first, then x-power
descending), which fixes the meaning of coefficient vectors downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Polynomial",
    "multi_indices",
    "monomial_basis",
    "harmonic_basis_2d",
]

MultiIndex = tuple[int, ...]


def multi_indices(dim: int, n_max: int) -> list[MultiIndex]:
    """All multi-indices of total degree <= n_max, graded-lex ordered."""
    if dim == 1:
        return [(i,) for i in range(n_max + 1)]
    out = []
    for deg in range(n_max + 1):
        for i in range(deg, -1, -1):
            out.append((i, deg - i))
    return out


@dataclass(frozen=True)
class Polynomial:
    dim: int
    center: tuple[float, ...]
    coeffs: dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if len(self.center) != self.dim:
            raise ValueError("center/dim mismatch")
        clean = {tuple(int(i) for i in a): float(c) for a, c in self.coeffs.items() if c != 0.0}
        for a in clean:
            if len(a) != self.dim or any(i < 0 for i in a):
                raise ValueError(f"bad multi-index {a}")
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @staticmethod
    def constant(dim: int, value: float, center=None) -> "Polynomial":
        center = center if center is not None else (0.0,) * dim
        return Polynomial(dim, tuple(np.atleast_1d(center)), {(0,) * dim: value})

    @staticmethod
    def monomial(dim: int, alpha: MultiIndex, center=None, coeff: float = 1.0) -> "Polynomial":
        center = center if center is not None else (0.0,) * dim
        return Polynomial(dim, tuple(np.atleast_1d(center)), {tuple(alpha): coeff})

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    def eval(self, points):
        """Evaluate at one point or an array of points (last axis = dim)."""
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 0 or (self.dim == 2 and pts.ndim == 1)
        if self.dim == 1:
            dx = np.atleast_1d(pts) - self.center[0]
            out = np.zeros_like(dx)
            for (i,), c in self.coeffs.items():
                out += c * dx**i
        else:
            pts2 = np.atleast_2d(pts)
            dx = pts2[..., 0] - self.center[0]
            dy = pts2[..., 1] - self.center[1]
            out = np.zeros_like(dx)
            for (i, j), c in self.coeffs.items():
                out += c * dx**i * dy**j
        return float(out.reshape(-1)[0]) if scalar else out

    def partial(self, beta) -> "Polynomial":
        """Exact derivative d^beta; may be the zero polynomial."""
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if len(beta) != self.dim:
            raise ValueError("multi-index/dim mismatch")
        new: dict[MultiIndex, float] = {}
        for a, c in self.coeffs.items():
            if any(ai < bi for ai, bi in zip(a, beta)):
                continue
            fac = 1.0
            for ai, bi in zip(a, beta):
                fac *= math.perm(ai, bi)
            new_a = tuple(ai - bi for ai, bi in zip(a, beta))
            new[new_a] = new.get(new_a, 0.0) + fac * c
        return Polynomial(self.dim, self.center, new)

    def gradient(self) -> list["Polynomial"]:
        units = [(1,)] if self.dim == 1 else [(1, 0), (0, 1)]
        return [self.partial(e) for e in units]

    def laplacian(self) -> "Polynomial":
        if self.dim == 1:
            return self.partial((2,))
        return self.partial((2, 0)) + self.partial((0, 2))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if other.dim != self.dim or other.center != self.center:
            raise ValueError("operands must share dim and center")
        new = dict(self.coeffs)
        for a, c in other.coeffs.items():
            new[a] = new.get(a, 0.0) + c
        return Polynomial(self.dim, self.center, new)

    def __mul__(self, scalar: float) -> "Polynomial":
        return Polynomial(self.dim, self.center, {a: scalar * c for a, c in self.coeffs.items()})

    __rmul__ = __mul__

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs.values())


def monomial_basis(dim: int, n_max: int, center=None) -> list[Polynomial]:
    """Shifted monomials of total degree <= n_max, graded-lex ordered."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return [Polynomial.monomial(dim, a, center) for a in multi_indices(dim, n_max)]


def harmonic_basis_2d(n_max: int, center=None) -> list[Polynomial]:
    """{1} plus Re/Im of (z - z0)^k for k = 1..n_max; all have zero Laplacian."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    center = tuple(np.atleast_1d(center)) if center is not None else (0.0, 0.0)
    out = [Polynomial.constant(2, 1.0, center)]
    for k in range(1, n_max + 1):
        re: dict[MultiIndex, float] = {}
        im: dict[MultiIndex, float] = {}
        for j in range(k + 1):
            # (x + iy)^k term: C(k,j) x^{k-j} (iy)^j
            c = math.comb(k, j)
            if j % 4 == 0:
                re[(k - j, j)] = c
            elif j % 4 == 1:
                im[(k - j, j)] = c
            elif j % 4 == 2:
                re[(k - j, j)] = -c
            else:
                im[(k - j, j)] = -c
        out.append(Polynomial(2, center, re))
        out.append(Polynomial(2, center, im))
    return out

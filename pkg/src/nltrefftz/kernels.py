"""Convolution kernels with exact partial derivatives and support truncation.

Three kernel families are provided:

* ``GaussianKernel`` -- the unnormalized Gaussian ``exp(-|r|^2 / (2 sigma^2))``
  (peak value 1), in 1 or 2 dimensions.  Partial derivatives of any order are
  available in closed form via a Hermite-style polynomial recurrence.
* ``YukawaKernel`` -- screened-Coulomb form, evaluation only.
* ``PolyKernel`` -- a 1D polynomial kernel, used by tests to probe the
  restricted-convolution identities with exactly integrable integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .polynomials import Polynomial

__all__ = [
    "Kernel",
    "GaussianKernel",
    "YukawaKernel",
    "PolyKernel",
    "KernelError",
    "UnsupportedKernelOperation",
]


class KernelError(ValueError):
    """Invalid kernel parameters or evaluation point."""


class UnsupportedKernelOperation(KernelError):
    """Requested operation is not defined for this kernel variant."""


def _as_vector(r, dim: int) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.shape[-1] != dim and not (dim == 1 and r.ndim == 1):
        raise KernelError(f"point of dimension {r.shape[-1]} for a dim-{dim} kernel")
    return r


@lru_cache(maxsize=256)
def _gaussian_deriv_poly(order: int, sigma: float) -> tuple[float, ...]:
    """Coefficients of P_n with d^n/dt^n exp(-t^2/(2s^2)) = P_n(t) exp(-t^2/(2s^2)).

    Recurrence: P_0 = 1, P_{n+1} = P_n' - (t/s^2) P_n.
    """
    coeffs = np.zeros(order + 1)
    coeffs[0] = 1.0
    for n in range(order):
        deriv = np.polynomial.polynomial.polyder(coeffs[: n + 1])
        nxt = np.zeros(n + 2)
        nxt[: len(deriv)] = deriv
        nxt[1:] -= coeffs[: n + 1] / sigma**2
        coeffs = nxt
    return tuple(coeffs)


@dataclass(frozen=True)
class Kernel:
    """Base class; concrete kernels implement value() and partial()."""

    dim: int = 1

    def value(self, r):
        raise NotImplementedError

    def partial(self, beta, r):
        raise NotImplementedError

    def truncation_radius(self, tol: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise KernelError("sigma must be positive")
        if self.dim not in (1, 2):
            raise KernelError("dim must be 1 or 2")

    def value_1d(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-(t**2) / (2.0 * self.sigma**2))

    def deriv_1d(self, order: int, t):
        """order-th derivative of the 1D profile, exact via the recurrence."""
        t = np.asarray(t, dtype=float)
        if order == 0:
            return self.value_1d(t)
        coeffs = _gaussian_deriv_poly(order, self.sigma)
        return np.polynomial.polynomial.polyval(t, coeffs) * self.value_1d(t)

    def value(self, r):
        r = _as_vector(r, self.dim)
        if self.dim == 1:
            return float(np.squeeze(self.value_1d(r))) if r.size == 1 else self.value_1d(r)
        return float(self.value_1d(r[..., 0]) * self.value_1d(r[..., 1]))

    def partial(self, beta, r):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if len(beta) != self.dim or any(b < 0 for b in beta):
            raise KernelError(f"bad multi-index {beta} for dim {self.dim}")
        r = _as_vector(r, self.dim)
        if self.dim == 1:
            out = self.deriv_1d(beta[0], r)
            return float(np.squeeze(out)) if out.size == 1 else out
        return float(self.deriv_1d(beta[0], r[..., 0]) * self.deriv_1d(beta[1], r[..., 1]))

    def truncation_radius(self, tol: float) -> float:
        _check_tol(tol)
        return self.sigma * math.sqrt(2.0 * math.log(1.0 / tol))


@dataclass(frozen=True)
class YukawaKernel(Kernel):
    """Screened-Coulomb kernel; value only (no derivatives, no Trefftz use).

    ``si_prefactor`` selects the 1/(4 pi lambda^2) normalization; otherwise
    the prefactor is 1/lambda^2.
    """

    lam: float = 1.0
    si_prefactor: bool = False

    def __post_init__(self):
        if self.lam <= 0:
            raise KernelError("lambda must be positive")

    @property
    def prefactor(self) -> float:
        p = 1.0 / self.lam**2
        return p / (4.0 * math.pi) if self.si_prefactor else p

    def value(self, r):
        r = _as_vector(r, self.dim)
        dist = float(np.linalg.norm(r))
        if dist == 0.0:
            raise KernelError("Yukawa kernel is singular at r = 0")
        return self.prefactor * math.exp(-dist / self.lam)

    def partial(self, beta, r):
        raise UnsupportedKernelOperation("derivatives of the Yukawa kernel are not supported")

    def truncation_radius(self, tol: float) -> float:
        _check_tol(tol)
        return self.lam * math.log(1.0 / tol)


@dataclass(frozen=True)
class PolyKernel(Kernel):
    """1D polynomial kernel, a testing aid with exactly computable convolutions."""

    poly: Polynomial = field(default_factory=lambda: Polynomial.constant(1, 1.0))

    def __post_init__(self):
        if self.dim != 1 or self.poly.dim != 1:
            raise KernelError("polynomial kernels are 1D only")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = self.poly.eval(r)
        return float(np.squeeze(out)) if out.size == 1 else out

    def partial(self, beta, r):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        out = self.poly.partial(beta).eval(np.asarray(r, dtype=float))
        return float(np.squeeze(out)) if out.size == 1 else out

    def truncation_radius(self, tol: float) -> float:
        raise UnsupportedKernelOperation("polynomial kernels have unbounded support")


def _check_tol(tol: float) -> None:
    if not (0.0 < tol <= 1.0):
        raise KernelError("tol must lie in (0, 1]")

"""1D nonlocal two-point boundary-value problem with a constant D field.

Setup: potential prescribed at both ends of an interval, a local subinterval
embedded in a nonlocal medium, and the constitutive law
D = eps_loc E + eps_nl (K *_dom E).  Since div D = 0 in 1D, D is a single
scalar unknown; E is discretized as piecewise-constant on a uniform grid and
collocated at cell midpoints (Nystrom style).

Two convolution-domain variants are supported: integrate over the whole
interval, or only over the nonlocal region.  Independently, the convolution
term itself can be applied at every point or only at points of the nonlocal
region (``apply_conv_in``), which is the model ambiguity the experiments
record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import GaussianKernel, Kernel
from .nlconv import ConvDomain, _panel_rule

__all__ = ["BvpConfig", "BvpSolution", "solve_bvp_1d", "refine_until",
           "WHOLE_DOMAIN", "NONLOCAL_ONLY", "APPLY_EVERYWHERE", "APPLY_NONLOCAL_ONLY"]

WHOLE_DOMAIN = "whole-domain"
NONLOCAL_ONLY = "nonlocal-only"
APPLY_EVERYWHERE = "everywhere"
APPLY_NONLOCAL_ONLY = "nonlocal-region-only"


@dataclass(frozen=True)
class BvpConfig:
    domain: tuple = (-5.0, 5.0)
    local_interval: tuple = (-1.0, 1.0)
    kernel: Kernel = field(default_factory=lambda: GaussianKernel(dim=1, sigma=1.0))
    eps_loc: float = 1.0
    eps_nl: float = 10.0
    conv_variant: str = WHOLE_DOMAIN
    apply_conv_in: str = APPLY_EVERYWHERE
    n_cells: int = 256
    u_left: float = 0.0
    u_right: float = 1.0

    def __post_init__(self):
        a, b = self.domain
        c, d = self.local_interval
        if not a < c < d < b:
            raise ValueError("need a < c < d < b")
        if self.n_cells < 16:
            raise ValueError("n_cells must be >= 16")
        if self.conv_variant not in (WHOLE_DOMAIN, NONLOCAL_ONLY):
            raise ValueError(f"unknown conv_variant {self.conv_variant!r}")
        if self.apply_conv_in not in (APPLY_EVERYWHERE, APPLY_NONLOCAL_ONLY):
            raise ValueError(f"unknown apply_conv_in {self.apply_conv_in!r}")


@dataclass(frozen=True)
class BvpSolution:
    cfg: BvpConfig
    midpoints: np.ndarray
    E: np.ndarray
    nodes: np.ndarray
    u: np.ndarray
    D: float
    residual: float
    snapped_interfaces: tuple
    history: list = field(default_factory=list)  # (n_cells, D) pairs from refine_until
    converged: bool = True

    def d_profile(self, points: np.ndarray) -> np.ndarray:
        """Reconstruct D(x) from the discrete E field at arbitrary points."""
        return _apply_constitutive(self.cfg, self.snapped_interfaces,
                                   self.midpoints, self.E,
                                   np.asarray(points, dtype=float))


def _snap(cfg: BvpConfig):
    """Snap the local-interval endpoints to the cell grid."""
    a, b = cfg.domain
    h = (b - a) / cfg.n_cells
    c = a + round((cfg.local_interval[0] - a) / h) * h
    d = a + round((cfg.local_interval[1] - a) / h) * h
    if not a < c < d < b:
        raise ValueError("local interval collapses after grid snapping")
    return c, d


def _conv_dom(cfg: BvpConfig, interfaces) -> ConvDomain:
    a, b = cfg.domain
    if cfg.conv_variant == WHOLE_DOMAIN:
        return ConvDomain.interval(a, b)
    c, d = interfaces
    return ConvDomain.intervals([(a, c), (d, b)])


def _kernel_cell_integrals(kernel: Kernel, dom: ConvDomain, points: np.ndarray,
                           edges: np.ndarray) -> np.ndarray:
    """M[i, j] = int_{cell_j  intersect dom} K(x_i - x') dx' by panel quadrature."""
    sigma = getattr(kernel, "sigma", None)
    n_cells = edges.size - 1
    M = np.zeros((points.size, n_cells))
    h = edges[1] - edges[0]
    pts_per_cell = max(2, math.ceil(4 * h / sigma)) if sigma else 4
    for ((lo, hi),) in dom.boxes:
        j0 = int(round((lo - edges[0]) / h))
        j1 = int(round((hi - edges[0]) / h))
        for j in range(max(j0, 0), min(j1, n_cells)):
            nodes, w = _panel_rule(edges[j], edges[j + 1], h, pts_per_cell)
            M[:, j] += kernel.value_1d(points[:, None] - nodes[None, :]) @ w
    return M


def _apply_constitutive(cfg, interfaces, midpoints, E, points):
    a, b = cfg.domain
    h = (b - a) / midpoints.size
    edges = np.linspace(a, b, midpoints.size + 1)
    dom = _conv_dom(cfg, interfaces)
    M = _kernel_cell_integrals(cfg.kernel, dom, points, edges)
    idx = np.clip(((points - a) / h).astype(int), 0, midpoints.size - 1)
    D = cfg.eps_loc * E[idx]
    conv = cfg.eps_nl * (M @ E)
    if cfg.apply_conv_in == APPLY_EVERYWHERE:
        D = D + conv
    else:
        c, d = interfaces
        nonlocal_mask = (points < c) | (points > d)
        D = D + np.where(nonlocal_mask, conv, 0.0)
    return D


def solve_bvp_1d(cfg: BvpConfig) -> BvpSolution:
    """Solve for piecewise-constant E and the scalar D.

    Unknowns: E on each cell plus D.  Collocation of the constitutive law at
    every cell midpoint, closed by the potential-drop equation
    sum_j E_j h = u(a) - u(b).
    """
    a, b = cfg.domain
    n = cfg.n_cells
    h = (b - a) / n
    interfaces = _snap(cfg)
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    dom = _conv_dom(cfg, interfaces)

    M = _kernel_cell_integrals(cfg.kernel, dom, mid, edges)
    A = np.zeros((n + 1, n + 1))
    rhs = np.zeros(n + 1)
    A[:n, :n] = cfg.eps_nl * M
    if cfg.apply_conv_in == APPLY_NONLOCAL_ONLY:
        c, d = interfaces
        local_rows = (mid > c) & (mid < d)
        A[:n, :n][local_rows] = 0.0
    A[:n, :n] += cfg.eps_loc * np.eye(n)
    A[:n, n] = -1.0          # ... = D
    A[n, :n] = h             # potential drop closes the system
    rhs[n] = cfg.u_left - cfg.u_right

    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite entries in the collocation matrix")
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(A)
        raise ValueError(f"singular collocation system (cond ~ {cond:.2e})") from exc

    E, D = sol[:n], float(sol[n])
    u = np.empty(n + 1)
    u[0] = cfg.u_left
    u[1:] = cfg.u_left - np.cumsum(E) * h
    residual = float(np.max(np.abs(A @ sol - rhs)))
    return BvpSolution(cfg, mid, E, edges, u, D, residual, interfaces)


def refine_until(cfg: BvpConfig, target_rel_change: float = 1e-4,
                 max_cells: int = 4096) -> BvpSolution:
    """Double n_cells until successive D values agree to target_rel_change."""
    if target_rel_change <= 0:
        raise ValueError("target_rel_change must be positive")
    history = []
    n = cfg.n_cells
    prev_D = None
    sol = None
    while n <= max_cells:
        sol = solve_bvp_1d(replace(cfg, n_cells=n))
        history.append((n, sol.D))
        if prev_D is not None and abs(sol.D - prev_D) <= target_rel_change * abs(sol.D):
            return replace(sol, history=history, converged=True)
        prev_D = sol.D
        n *= 2
    return replace(sol, history=history, converged=False)

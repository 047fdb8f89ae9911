"""Construction of pseudoharmonic (quasi-Trefftz) function sets.

A pseudoharmonic set is the null space of the linear system that forces all
derivatives of div D up to a chosen order to vanish at an anchor point, with
D produced from polynomial potentials by the restricted-convolution
constitutive law.  Bulk sets use a monomial potential basis; interface sets
glue harmonic polynomials on the local side to monomials on the nonlocal
side through jump conditions for u and the normal D component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .kernels import GaussianKernel, PolyKernel, YukawaKernel
from .nlconv import ConvConfig, ConvDomain, conv_restricted, conv_restricted_many, d_field, div_d_derivative
from .numerics import DEFAULT_REL_TOL, null_space
from .polynomials import Polynomial, harmonic_basis_2d, monomial_basis, multi_indices

__all__ = [
    "ConstraintSystem",
    "TrefftzSet",
    "EmptyTrefftzSetError",
    "build_constraints",
    "build_trefftz_bulk",
    "build_trefftz_interface_2d",
    "evaluate_trefftz",
]

NEGLIGIBLE_ROW = 1e-14


class EmptyTrefftzSetError(RuntimeError):
    """No functions satisfy the constraints at this (n, m)."""


@dataclass(frozen=True)
class ConstraintSystem:
    matrix: np.ndarray                 # scaled, rows of unit max-norm
    raw_matrix: np.ndarray             # as assembled, kept rows only
    row_labels: list             # multi-index gamma per kept row
    dropped_rows: list           # labels of rows negligible before scaling
    row_scales: np.ndarray


@dataclass(frozen=True)
class TrefftzSet:
    dim: int
    basis_kind: str                    # "monomial" | "glued"
    coeff_matrix: np.ndarray           # n_funcs x n_basis, orthonormal rows
    cfg: ConvConfig
    x0: tuple
    m: int
    n_max: int
    residuals: np.ndarray              # per-function max raw constraint residual
    residual_scale: float              # max of the same quantity over the raw basis
    trefftz_domain: tuple              # ((lo,hi),) per axis
    # glued sets only:
    eps_loc_local: float | None = None
    p_max: int | None = None
    n_local: int = 0                   # leading columns spanned by the local basis

    @property
    def n_funcs(self) -> int:
        return self.coeff_matrix.shape[0]

    def basis(self) -> list[Polynomial]:
        if self.basis_kind == "monomial":
            return monomial_basis(self.dim, self.n_max, self.x0)
        local = harmonic_basis_2d(self.n_max, (0.0, 0.0))
        nonlocal_ = monomial_basis(2, self.n_max, self.x0)
        return local + nonlocal_

    def potential(self, which: int, side: str = "nonlocal") -> Polynomial:
        """Potential polynomial of function `which` (side matters only when glued)."""
        row = self.coeff_matrix[which]
        basis = self.basis()
        if self.basis_kind == "monomial":
            parts = zip(row, basis)
        elif side == "local":
            parts = zip(row[: self.n_local], basis[: self.n_local])
        else:
            parts = zip(row[self.n_local:], basis[self.n_local:])
        out = None
        for c, p in parts:
            term = c * p
            out = term if out is None else out + term
        return out

    def to_json(self) -> str:
        kernel = self.cfg.kernel
        if isinstance(kernel, GaussianKernel):
            kdoc = {"variant": "gaussian", "sigma": kernel.sigma, "dim": kernel.dim}
        elif isinstance(kernel, YukawaKernel):
            kdoc = {"variant": "yukawa", "lambda": kernel.lam,
                    "si_prefactor": kernel.si_prefactor, "dim": kernel.dim}
        else:
            kdoc = {"variant": "polytest",
                    "coeffs": sorted((list(a), c) for a, c in kernel.poly.coeffs.items()),
                    "center": list(kernel.poly.center), "dim": 1}
        doc = {
            "dim": self.dim,
            "basis_kind": self.basis_kind,
            "basis_ordering": "graded-lex",
            "n_max": self.n_max,
            "m": self.m,
            "x0": list(self.x0),
            "trefftz_domain": [list(side) for side in self.trefftz_domain],
            "cfg": {
                "eps_loc": self.cfg.eps_loc,
                "eps_nl": self.cfg.eps_nl,
                "quad_points_per_sigma": self.cfg.quad_points_per_sigma,
                "kernel": kdoc,
                "conv_domain": [[list(side) for side in box]
                                for box in self.cfg.conv_domain.boxes],
            },
            "eps_loc_local": self.eps_loc_local,
            "p_max": self.p_max,
            "n_local": self.n_local,
            "coeff_matrix": [list(row) for row in self.coeff_matrix],
            "residuals": list(self.residuals),
            "residual_scale": self.residual_scale,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "TrefftzSet":
        doc = json.loads(text)
        kdoc = doc["cfg"]["kernel"]
        if kdoc["variant"] == "gaussian":
            kernel = GaussianKernel(dim=kdoc["dim"], sigma=kdoc["sigma"])
        elif kdoc["variant"] == "yukawa":
            kernel = YukawaKernel(dim=kdoc["dim"], lam=kdoc["lambda"],
                                  si_prefactor=kdoc["si_prefactor"])
        else:
            poly = Polynomial(1, tuple(kdoc["center"]),
                              {tuple(a): c for a, c in kdoc["coeffs"]})
            kernel = PolyKernel(dim=1, poly=poly)
        dom = ConvDomain(doc["dim"], tuple(tuple(tuple(side) for side in box)
                                           for box in doc["cfg"]["conv_domain"]))
        cfg = ConvConfig(doc["cfg"]["eps_loc"], doc["cfg"]["eps_nl"], kernel, dom,
                         doc["cfg"]["quad_points_per_sigma"])
        return TrefftzSet(
            dim=doc["dim"], basis_kind=doc["basis_kind"],
            coeff_matrix=np.array(doc["coeff_matrix"], dtype=float),
            cfg=cfg, x0=tuple(doc["x0"]), m=doc["m"], n_max=doc["n_max"],
            residuals=np.array(doc["residuals"], dtype=float),
            residual_scale=doc["residual_scale"],
            trefftz_domain=tuple(tuple(side) for side in doc["trefftz_domain"]),
            eps_loc_local=doc["eps_loc_local"], p_max=doc["p_max"],
            n_local=doc["n_local"])


def constraint_orders(dim: int, m: int, include_order_zero: bool = True) -> list:
    """Derivative multi-indices gamma applied to div D; |gamma| <= m.

    ``include_order_zero=False`` reproduces the literal beta = 1..m indexing
    of the 1D construction (one fewer row in 1D); the default keeps gamma = 0,
    which reproduces the reported function counts.
    """
    start = 0 if include_order_zero else 1
    return [g for g in multi_indices(dim, m) if sum(g) >= start]


def build_constraints(cfg: ConvConfig, basis: list[Polynomial], x0, m: int,
                      include_order_zero: bool = True) -> ConstraintSystem:
    """Assemble rows d^gamma(div D_alpha)(x0) for |gamma| <= m, max-norm scaled."""
    dim = basis[0].dim
    labels = constraint_orders(dim, m, include_order_zero)
    raw = np.array([[div_d_derivative(cfg, u, x0, g) for u in basis] for g in labels])
    return _scale_rows(raw, labels)


def _scale_rows(raw: np.ndarray, labels: list) -> ConstraintSystem:
    keep, dropped, scales, rows, raw_rows = [], [], [], [], []
    for label, row in zip(labels, raw):
        s = float(np.max(np.abs(row))) if row.size else 0.0
        if s <= NEGLIGIBLE_ROW:
            dropped.append(label)
            continue
        keep.append(label)
        scales.append(s)
        rows.append(row / s)
        raw_rows.append(row)
    matrix = np.array(rows) if rows else np.zeros((0, raw.shape[1]))
    raw_kept = np.array(raw_rows) if raw_rows else np.zeros((0, raw.shape[1]))
    return ConstraintSystem(matrix, raw_kept, keep, dropped, np.array(scales))


def _orthonormal_rows(null_basis: np.ndarray, constant_vec: np.ndarray | None) -> np.ndarray:
    """Deterministic orthonormal row basis of span(null_basis columns).

    If the constant potential lies in the span it becomes the explicit first
    row; remaining rows come from an SVD of the complement, with signs fixed
    so each row's largest-magnitude entry is positive.
    """
    M = null_basis.T  # rows span the null space
    rows_out = []
    if constant_vec is not None:
        e = constant_vec / np.linalg.norm(constant_vec)
        # M has orthonormal rows, so M.T (M e) is the projection of e onto the span
        if np.linalg.norm(M.T @ (M @ e) - e) <= 1e-8:
            rows_out.append(e)
            M = M - np.outer(M @ e, e)
    if M.size:
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        keep = s > 1e-10 * (s[0] if s.size else 1.0)
        for row in vh[keep]:
            idx = int(np.argmax(np.abs(row)))
            rows_out.append(row if row[idx] > 0 else -row)
    out = np.array(rows_out)
    return out


def build_trefftz_bulk(cfg: ConvConfig, n_max: int, x0, m: int, trefftz_domain,
                       rel_tol: float = DEFAULT_REL_TOL,
                       include_order_zero: bool = True) -> TrefftzSet:
    """Pseudoharmonic set on a monomial potential basis centered at x0."""
    x0 = tuple(np.atleast_1d(np.asarray(x0, dtype=float)))
    dim = cfg.conv_domain.dim
    basis = monomial_basis(dim, n_max, x0)
    system = build_constraints(cfg, basis, x0, m, include_order_zero)
    N = null_space(system.matrix, rel_tol)
    if N.shape[1] == 0:
        raise EmptyTrefftzSetError(f"no pseudoharmonic functions at n={n_max}, m={m}")
    const_vec = np.zeros(len(basis))
    const_vec[0] = 1.0
    coeff = _orthonormal_rows(N, const_vec)
    residuals, scale = _constraint_residuals(system, coeff)
    dom = tuple(tuple(map(float, side)) for side in np.atleast_2d(trefftz_domain))
    return TrefftzSet(dim=dim, basis_kind="monomial", coeff_matrix=coeff, cfg=cfg,
                      x0=x0, m=m, n_max=n_max, residuals=residuals,
                      residual_scale=scale, trefftz_domain=dom)


def _constraint_residuals(system: ConstraintSystem, coeff: np.ndarray):
    if system.raw_matrix.size == 0:
        return np.zeros(coeff.shape[0]), 0.0
    per_func = np.max(np.abs(system.raw_matrix @ coeff.T), axis=0)
    scale = float(np.max(np.abs(system.raw_matrix)))
    return per_func, scale


def build_trefftz_interface_2d(cfg_nl: ConvConfig, eps_loc_local: float, n_max: int,
                               m: int, p_max: int, x0=None, trefftz_domain=None,
                               rel_tol: float = DEFAULT_REL_TOL,
                               include_order_zero: bool = True) -> TrefftzSet:
    """Glued pseudoharmonic set across the interface x = 0.

    Local medium (x < 0): harmonic polynomials up to n_max, D = eps_loc_local E.
    Nonlocal medium (x > 0): monomials up to n_max under cfg_nl's law, with
    divergence constraints at x0 and jump conditions for u and D.n at the
    origin through tangential-derivative order p_max.
    """
    sigma = getattr(cfg_nl.kernel, "sigma", 0.5)
    x0 = (sigma / 2.0, 0.0) if x0 is None else tuple(np.atleast_1d(np.asarray(x0, dtype=float)))
    if trefftz_domain is None:
        trefftz_domain = ((-sigma, sigma), (-sigma, sigma))
    local = harmonic_basis_2d(n_max, (0.0, 0.0))
    nonloc = monomial_basis(2, n_max, x0)
    n_loc, n_nl = len(local), len(nonloc)

    rows, labels = [], []
    # (a) divergence constraints on the nonlocal side only
    for g in constraint_orders(2, m, include_order_zero):
        row = np.zeros(n_loc + n_nl)
        for j, u in enumerate(nonloc):
            row[n_loc + j] = div_d_derivative(cfg_nl, u, x0, g)
        rows.append(row)
        labels.append(("div", g))
    origin = np.array([0.0, 0.0])
    # (b) jump conditions at the origin: tangential derivatives of [u] and [D.n]
    for k in range(p_max + 1):
        row = np.zeros(n_loc + n_nl)
        for j, u in enumerate(local):
            row[j] = -u.partial((0, k)).eval(origin)
        for j, u in enumerate(nonloc):
            row[n_loc + j] = u.partial((0, k)).eval(origin)
        rows.append(row)
        labels.append(("u_jump", k))
    for k in range(p_max + 1):
        row = np.zeros(n_loc + n_nl)
        for j, u in enumerate(local):
            # local D.n = -eps_loc_local du/dx
            row[j] = eps_loc_local * u.partial((1, k)).eval(origin)
        for j, u in enumerate(nonloc):
            dux = u.partial((1, 0))
            val = -cfg_nl.eps_loc * u.partial((1, k)).eval(origin)
            if cfg_nl.eps_nl != 0.0 and not dux.is_zero():
                val -= cfg_nl.eps_nl * conv_restricted(
                    cfg_nl.kernel, dux, cfg_nl.conv_domain, origin, (0, k),
                    quad_points_per_sigma=cfg_nl.quad_points_per_sigma)
            row[n_loc + j] = val
        rows.append(row)
        labels.append(("dn_jump", k))

    system = _scale_rows(np.array(rows), labels)
    N = null_space(system.matrix, rel_tol)
    if N.shape[1] == 0:
        raise EmptyTrefftzSetError(f"no glued functions at n={n_max}, m={m}, p_max={p_max}")
    const_vec = np.zeros(n_loc + n_nl)
    const_vec[0] = 1.0
    const_vec[n_loc] = 1.0  # same constant on both sides
    coeff = _orthonormal_rows(N, const_vec)
    residuals, scale = _constraint_residuals(system, coeff)
    dom = tuple(tuple(map(float, side)) for side in np.atleast_2d(trefftz_domain))
    return TrefftzSet(dim=2, basis_kind="glued", coeff_matrix=coeff, cfg=cfg_nl,
                      x0=x0, m=m, n_max=n_max, residuals=residuals,
                      residual_scale=scale, trefftz_domain=dom,
                      eps_loc_local=eps_loc_local, p_max=p_max, n_local=n_loc)


def _local_cfg(ts: TrefftzSet) -> ConvConfig:
    return ConvConfig(ts.eps_loc_local, 0.0, ts.cfg.kernel, ts.cfg.conv_domain,
                      ts.cfg.quad_points_per_sigma)


def evaluate_trefftz(ts: TrefftzSet, which: int, what: str, points) -> np.ndarray:
    """Sample u, E, D, or divD of one pseudoharmonic function.

    Returns shape (n,) for u/divD and (n, dim) for E/D.  For glued sets the
    side is chosen by sign(x): the local law applies for x < 0.
    """
    if not 0 <= which < ts.n_funcs:
        raise IndexError(f"function index {which} out of range")
    pts = np.asarray(points, dtype=float)
    pts = np.atleast_1d(pts) if ts.dim == 1 else np.atleast_2d(pts)
    n = pts.shape[0]

    if ts.basis_kind == "monomial":
        sides = [(np.arange(n), ts.potential(which), ts.cfg)]
    else:
        mask = pts[:, 0] < 0.0
        sides = [(np.nonzero(mask)[0], ts.potential(which, "local"), _local_cfg(ts)),
                 (np.nonzero(~mask)[0], ts.potential(which, "nonlocal"), ts.cfg)]

    if what == "u":
        out = np.zeros(n)
    elif what in ("E", "D"):
        out = np.zeros((n, ts.dim))
    elif what == "divD":
        out = np.zeros(n)
    else:
        raise ValueError(f"unknown field {what!r}")

    for idx, u, cfg in sides:
        if idx.size == 0:
            continue
        sub = pts[idx]
        if what == "u":
            out[idx] = u.eval(sub)
        elif what == "E":
            for i, du in enumerate(u.gradient()):
                vals = -du.eval(sub)
                if ts.dim == 1:
                    out[idx, i] = vals
                else:
                    out[idx, i] = vals
        elif what == "D":
            for i, du in enumerate(u.gradient()):
                vals = -cfg.eps_loc * du.eval(sub)
                if cfg.eps_nl != 0.0 and not du.is_zero():
                    vals = vals - cfg.eps_nl * conv_restricted_many(
                        cfg.kernel, du, cfg.conv_domain, sub, None,
                        cfg.quad_points_per_sigma)
                out[idx, i] = vals
        else:  # divD
            lap = u.laplacian()
            vals = -cfg.eps_loc * lap.eval(sub)
            vals = np.broadcast_to(np.atleast_1d(vals), (idx.size,)).copy()
            if cfg.eps_nl != 0.0:
                units = [(1,)] if ts.dim == 1 else [(1, 0), (0, 1)]
                for e in units:
                    du = u.partial(e)
                    if du.is_zero():
                        continue
                    vals -= cfg.eps_nl * conv_restricted_many(
                        cfg.kernel, du, cfg.conv_domain, sub, e,
                        cfg.quad_points_per_sigma)
            out[idx] = vals
    return out

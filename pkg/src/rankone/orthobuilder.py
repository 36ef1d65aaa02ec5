"""A +-1 valued step function on [-1, 1) orthogonal to a finite family in L^2(eta).

Level ``m`` cuts [-1, 1) into ``2^m`` dyadic cells and splits each one at its
eta-median, with -1 on the left half and +1 on the right.  An eta-median
split annihilates every cell-constant function, so the inner products shrink
with the cell size.  When eta has atoms, a cell holding an atom cannot be
balanced; the split points are then nudged by a few Gauss-Newton steps.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceWarning
from .measures import SpectralMeasure
from .quadrature import gauss_legendre

__all__ = ["SignFunction", "build_sign_function", "inner_products", "eta_cdf", "eta_quantile"]

N_GAUSS = 8
_CHUNK = 1 << 18
NEWTON_STEPS = 6


@dataclass(frozen=True, eq=False)
class SignFunction:
    """``signs[i]`` on ``[breakpoints[i], breakpoints[i+1])``, the last cell ending at 1.

    ``residual``, ``level``, ``history`` and ``converged`` describe the
    construction that produced it.
    """

    breakpoints: np.ndarray
    signs: np.ndarray
    residual: float = float("nan")
    level: int = -1
    history: tuple[float, ...] = field(default=())
    converged: bool = True

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        sg = np.asarray(self.signs, dtype=float)
        if bp.ndim != 1 or bp.shape != sg.shape or bp.size == 0:
            raise ValueError("need one sign per breakpoint")
        if bp[0] != -1.0 or np.any(np.diff(bp) <= 0) or bp[-1] >= 1.0:
            raise ValueError("breakpoints must start at -1, increase strictly and stay below 1")
        if not np.all(np.abs(sg) == 1):
            raise ValueError("signs must be +-1")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "signs", sg)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (x >= -1.0) & (x < 1.0)
        out = np.where(inside, self.signs[np.clip(idx, 0, self.signs.size - 1)], 0.0)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "signs": self.signs.astype(int).tolist(),
                "residual": self.residual, "level": self.level, "history": list(self.history),
                "converged": self.converged}


def _check_eta(eta: SpectralMeasure) -> None:
    lo, hi = eta.support
    if lo < -1.0 or hi > 1.0:
        raise ValueError("eta must be supported in [-1, 1]")
    locs = eta.atom_locations
    if np.any(locs >= 1.0):
        raise ValueError("eta may not have a point mass at x = 1")
    if np.any(locs < -1.0):
        raise ValueError("eta atoms must lie in [-1, 1)")


# -- the eta distribution function ---------------------------------------------

def _ac_table(eta: SpectralMeasure):
    nodes, values = eta.ac.segments()
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (values[:-1] + values[1:]) * np.diff(nodes))])
    return nodes, values, cum


def _ac_cdf(table, x):
    nodes, values, cum = table
    x = np.clip(np.asarray(x, dtype=float), nodes[0], nodes[-1])
    k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
    u = x - nodes[k]
    h = nodes[k + 1] - nodes[k]
    slope = (values[k + 1] - values[k]) / h
    return cum[k] + values[k] * u + 0.5 * slope * u * u


def _ac_inverse(table, y):
    """Smallest ``x`` with a.c. CDF equal to ``y`` (``y`` within the total mass)."""
    nodes, values, cum = table
    y = np.clip(np.asarray(y, dtype=float), 0.0, cum[-1])
    k = np.clip(np.searchsorted(cum, y, side="left") - 1, 0, nodes.size - 2)
    delta = y - cum[k]
    h = nodes[k + 1] - nodes[k]
    slope = (values[k + 1] - values[k]) / h
    disc = np.sqrt(np.maximum(values[k] ** 2 + 2.0 * slope * delta, 0.0))
    denom = values[k] + disc
    u = np.where(denom > 0, 2.0 * delta / np.where(denom > 0, denom, 1.0), 0.0)
    return nodes[k] + np.clip(u, 0.0, h)


def eta_cdf(eta: SpectralMeasure, x):
    """``eta([-inf, x))``: atoms at ``x`` are not counted."""
    x = np.asarray(x, dtype=float)
    out = _ac_cdf(_ac_table(eta), x)
    for loc, m in zip(eta.atom_locations, eta.atom_masses):
        out = out + np.where(loc < x, m, 0.0)
    return out


def eta_quantile(eta: SpectralMeasure, y):
    """Smallest ``s`` with ``eta([-inf, s]) >= y``.

    If the target falls inside the jump of an atom, the atom location is
    returned, so that atom lands right of the split.
    """
    table = _ac_table(eta)
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape)
    locs, masses = eta.atom_locations, eta.atom_masses
    # between consecutive atoms the CDF is the a.c. CDF plus a constant
    before = _ac_cdf(table, locs) + np.concatenate([[0.0], np.cumsum(masses)[:-1]])
    after = before + masses
    region = np.searchsorted(after, y, side="left")  # number of atoms fully below y
    on_jump = np.zeros(y.shape, dtype=bool)
    for j in range(locs.size):
        hit = (region == j) & (y >= before[j])
        out[hit] = locs[j]
        on_jump |= hit
    below = np.concatenate([[0.0], np.cumsum(masses)])
    free = ~on_jump
    out[free] = _ac_inverse(table, y[free] - below[region[free]])
    return out


# -- inner products -------------------------------------------------------------

def _as_callables(fns) -> list[Callable]:
    out = []
    for f in fns:
        if callable(f):
            out.append(f)
        else:
            nodes, values = (np.asarray(v, dtype=float) for v in f)
            out.append(lambda x, n=nodes, v=values: np.interp(x, n, v))
    return out


def _piece_integrals(fns, eta: SpectralMeasure, edges: np.ndarray) -> np.ndarray:
    """``int_{edges[k]}^{edges[k+1]} f w dx`` for each f (rows) and piece (columns)."""
    xg, wg = gauss_legendre(N_GAUSS)
    out = np.empty((len(fns), edges.size - 1))
    for start in range(0, edges.size - 1, _CHUNK):
        a = edges[start:start + _CHUNK]
        b = edges[start + 1:start + _CHUNK + 1]
        n = b.size
        a = a[:n]
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[:, None] + half[:, None] * xg[None, :]
        w = eta.ac.density(x)
        for i, f in enumerate(fns):
            fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
            out[i, start:start + n] = half * ((fx * w) @ wg)
    return out


def _edges_for(h: SignFunction, eta: SpectralMeasure) -> np.ndarray:
    nodes, _ = eta.ac.segments()
    return np.unique(np.concatenate([h.breakpoints, [1.0], nodes[(nodes > -1.0) & (nodes < 1.0)]]))


def inner_products(h: SignFunction, fns: Sequence, eta: SpectralMeasure) -> np.ndarray:
    """``<f_n, h>_eta`` for every f_n; a.c. part piecewise by Gauss-Legendre, atoms exactly."""
    _check_eta(eta)
    fns = _as_callables(fns)
    edges = _edges_for(h, eta)
    pieces = _piece_integrals(fns, eta, edges)
    out = pieces @ h(edges[:-1])
    for loc, m in zip(eta.atom_locations, eta.atom_masses):
        out += m * h(loc) * np.array([float(np.asarray(f(np.array([loc])))[0]) for f in fns])
    return out


# -- construction -----------------------------------------------------------------

def _level_function(eta: SpectralMeasure, level: int):
    """Median-split sign function at ``level``; also returns the split points and cell edges."""
    edges = np.linspace(-1.0, 1.0, 2 ** level + 1)
    lo_mass = eta_cdf(eta, edges[:-1])
    hi_mass = eta_cdf(eta, edges[1:])
    total = hi_mass - lo_mass
    splits = eta_quantile(eta, lo_mass + 0.5 * total)
    splits = np.where(total > 0, np.clip(splits, edges[:-1], edges[1:]), 0.5 * (edges[:-1] + edges[1:]))
    return edges, splits


def _assemble(edges, splits, **meta) -> SignFunction:
    left = edges[:-1]
    bp = np.empty(2 * left.size)
    bp[0::2], bp[1::2] = left, splits
    sg = np.empty(bp.size)
    sg[0::2], sg[1::2] = -1.0, 1.0
    # drop empty cells (split on a cell edge)
    keep = np.concatenate([np.diff(bp) > 0, [bp[-1] < 1.0]])
    bp, sg = bp[keep], sg[keep]
    merged = np.concatenate([[True], sg[1:] != sg[:-1]])
    return SignFunction(bp[merged], sg[merged], **meta)


def _newton_correct(fns, eta, edges, splits, residual, tol):
    """Gauss-Newton on the split points; moving split ``s`` changes ``<f, h>`` by ``-2 f(s) w(s) ds``."""
    locs = eta.atom_locations
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    # a split may move only within the atom-free stretch that contains it
    for x in locs:
        lo = np.where((x <= splits) & (x > lo), x, lo)
        hi = np.where((x > splits) & (x < hi), x, hi)
    movable = ~np.isin(splits, locs) & (eta.ac.density(splits) > 0)
    best = (splits, residual)
    for _ in range(NEWTON_STEPS):
        r = inner_products(_assemble(edges, best[0]), fns, eta)
        if np.max(np.abs(r)) < tol:
            break
        s = best[0]
        jac = np.array([-2.0 * np.asarray(f(s), dtype=float) * eta.ac.density(s) for f in fns])
        jac[:, ~movable] = 0.0
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        cand = np.clip(s + step, lo, np.nextafter(hi, lo))
        cand = np.where(movable, cand, s)
        res = float(np.max(np.abs(inner_products(_assemble(edges, cand), fns, eta))))
        if res >= best[1]:
            break
        best = (cand, res)
    return best


def build_sign_function(fns: Sequence, eta: SpectralMeasure, tol: float = 1e-6,
                        max_level: int = 24, correct: bool | None = None) -> SignFunction:
    """Refine level by level until ``max_n |<f_n, h>_eta| < tol``.

    ``correct`` enables the split-point correction; by default it is used only
    when eta has atoms.  If ``max_level`` is reached the best function found is
    returned with ``converged=False`` and a :class:`ConvergenceWarning`.
    """
    _check_eta(eta)
    if tol <= 0:
        raise ValueError("tol must be positive")
    fns = _as_callables(fns)
    if correct is None:
        correct = bool(eta.atoms)
    history: list[float] = []
    best = None
    for level in range(max_level + 1):
        edges, splits = _level_function(eta, level)
        res = float(np.max(np.abs(inner_products(_assemble(edges, splits), fns, eta))))
        if correct and res >= tol:
            splits, res = _newton_correct(fns, eta, edges, splits, res, tol)
        history.append(res)
        if best is None or res < best[2]:
            best = (edges, splits, res, level)
        if res < tol:
            return _assemble(edges, splits, residual=res, level=level, history=tuple(history))
    edges, splits, res, level = best
    warnings.warn(f"no level up to {max_level} reached tol {tol:g}; best residual {res:.3g} at level {level}",
                  ConvergenceWarning, stacklevel=2)
    return _assemble(edges, splits, residual=res, level=level, history=tuple(history), converged=False)

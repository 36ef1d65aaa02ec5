"""Borel transform F, auxiliary transform G, boundary values F(x+i0), the
Krein relation for the perturbed transform, and the spectral representation
operator V_alpha.

All a.c. integrals are done exactly segment by segment for the
piecewise-linear weight.  For a segment ``[t0, t0 + h]`` and an evaluation
point ``z`` write ``c = t0 - z`` and ``eps = h / c``; then

    int w(t) / (t - z) dt   = w0 * L + (w1 - w0) * (eps - L) / eps,
    int w(t) / (t - x)^2 dt = w0 * h / (c (c + h)) + (w1 - w0) / h * (L - h / (c + h)),

with ``L = Log(1 + eps)``.  For real points ``L`` comes from ``log1p`` (or the
direct ratio when ``c1 << c0``); for complex points short series replace the
cancelling combinations when ``|eps|`` is small.  Either way tiny graded cells
and far-away points stay accurate.

Internal kernels take an ``anchor`` so that a real point ``anchor + offset``
is resolved even when the offset is far below the spacing of doubles at the
anchor (eigenvalues of weak couplings hug the support edge).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError, PerturbationPole, SingularPointError
from .measures import SpectralMeasure
from .quadrature import adaptive_quad

__all__ = [
    "BoundaryValue",
    "borel",
    "boundary_value",
    "g_transform",
    "krein_shift",
    "perturbed_ac_density",
    "representation_apply",
    "borel_quad",
    "g_quad",
]

_SERIES_CUT = 0.05
_NTERMS = 16


@dataclass(frozen=True)
class BoundaryValue:
    """``F(x + i0) = principal + i*pi*density``."""

    principal: float | np.ndarray
    density: float | np.ndarray

    @property
    def value(self):
        return self.principal + 1j * np.pi * self.density


# -- segment kernels ----------------------------------------------------------

def _series_L_R(e):
    """Series for ``L = log(1+e)`` and ``R = (e - L)/e``."""
    # R = sum_{k>=2} (-1)^k e^(k-1)/k ;  L = sum_{k>=1} (-1)^(k+1) e^k/k
    r = np.zeros_like(e)
    lg = np.zeros_like(e)
    for k in range(_NTERMS, 1, -1):
        r = r * e + (1.0 if k % 2 == 0 else -1.0) / k
    for k in range(_NTERMS, 0, -1):
        lg = lg * e + (1.0 if k % 2 == 1 else -1.0) / k
    return lg * e, r * e


def _real_log_ratio(c0, c1, eps):
    """``log(c1/c0)`` for same-sign reals: log1p near 1, the direct ratio when ``c1 << c0``."""
    near = np.abs(eps) < 0.5
    ratio = np.where(near, 1.0, c1 / np.where(c0 == 0, 1.0, c0))
    return np.where(near, np.log1p(np.where(near, eps, 0.0)), np.log(ratio))


def _log_and_remainder(c0, c1, h):
    """Return ``L = Log(c1/c0)`` and ``R = (eps - L)/eps`` with ``eps = h/c0``."""
    c0, c1 = np.broadcast_arrays(c0, c1)
    eps = h / c0
    if not np.iscomplexobj(eps):
        L = _real_log_ratio(c0, c1, eps)
        return L, (eps - L) / eps
    small = np.abs(eps) < _SERIES_CUT
    safe_eps = np.where(small, 0.5, eps)
    L = np.log(np.where(small, 1.0, c1 / np.where(c0 == 0, 1.0, c0)))
    R = (safe_eps - L) / safe_eps
    if np.any(small):
        L[small], R[small] = _series_L_R(eps[small])
    return L, R


def _g_remainder(c0, c1, h):
    """The bracket ``L - h/c1`` of the G kernel, by series when ``|h/c0|`` is small."""
    c0, c1 = np.broadcast_arrays(c0, c1)
    eps = h / c0
    if not np.iscomplexobj(eps):
        return _real_log_ratio(c0, c1, eps) - h / c1
    small = np.abs(eps) < _SERIES_CUT
    L = np.log(np.where(small, 1.0, c1 / c0))
    direct = L - h / c1
    if np.any(small):
        e = eps[small]
        # L - e/(1+e) = e^2 * sum_{k>=2} (-1)^k (k-1)/k e^(k-2)
        acc = np.zeros_like(e)
        for k in range(_NTERMS, 1, -1):
            acc = acc * e + (1.0 if k % 2 == 0 else -1.0) * (k - 1) / k
        direct[small] = e * e * acc
    return direct


def _ac_cauchy(nodes, values, anchor, z):
    """Sum over segments of int w/(t - z) dt with z = anchor + offset.  z: 1-d array."""
    t0 = nodes[:-1] - anchor
    t1 = nodes[1:] - anchor
    h = np.diff(nodes)
    w0, w1 = values[:-1], values[1:]
    out = np.empty(z.shape, dtype=np.result_type(z, float))
    for sl in _chunks(z.size, h.size):
        zz = z[sl, None]
        c0, c1 = t0[None, :] - zz, t1[None, :] - zz
        L, R = _log_and_remainder(c0, c1, h[None, :])
        out[sl] = np.sum(w0 * L + (w1 - w0) * R, axis=1)
    return out


def _ac_cauchy_sq(nodes, values, anchor, x):
    """Sum over segments of int w/(t - x)^2 dt for real x off the support."""
    t0 = nodes[:-1] - anchor
    t1 = nodes[1:] - anchor
    h = np.diff(nodes)
    w0, w1 = values[:-1], values[1:]
    out = np.empty(x.shape)
    for sl in _chunks(x.size, h.size):
        xx = x[sl, None]
        c0, c1 = t0[None, :] - xx, t1[None, :] - xx
        bracket = _g_remainder(c0, c1, h[None, :])
        out[sl] = np.sum(w0 * h / (c0 * c1) + (w1 - w0) / h * bracket, axis=1)
    return out


def _ac_principal(nodes, values, x):
    """Principal value of int w/(t - x) dt for x strictly inside the support (1-d array)."""
    h = np.diff(nodes)
    w0, w1 = values[:-1], values[1:]
    nseg = h.size
    # segments touching x: the one containing it, plus its left neighbour at a node
    right = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nseg - 1)
    at_node = nodes[right] == x
    left = np.where(at_node & (right > 0), right - 1, right)
    out = np.empty(x.shape)
    for sl in _chunks(x.size, nseg):
        xx = x[sl]
        rows = np.arange(xx.size)
        kr, kl = right[sl], left[sl]
        c0 = nodes[None, :-1] - xx[:, None]
        c1 = nodes[None, 1:] - xx[:, None]
        # park the touching segments on a harmless value, then replace them
        for k in (kl, kr):
            c0[rows, k] = 1.0
            c1[rows, k] = 1.0 + h[k]
        L, R = _log_and_remainder(c0, c1, h[None, :])
        far = w0 * L + (w1 - w0) * R
        total = far.sum(axis=1) - far[rows, kr] - np.where(kl != kr, far[rows, kl], 0.0)
        # touching segment: (w1 - w0) + w(x) (ln|c1| - ln|c0|); the divergent
        # ln 0 halves cancel between the two neighbours of a node
        for k, use in ((kr, np.ones(xx.size, bool)), (kl, kl != kr)):
            a0, a1 = nodes[k] - xx, nodes[k + 1] - xx
            wx = w0[k] + (w1[k] - w0[k]) * (-a0 / h[k])
            lg1 = np.log(np.abs(np.where(a1 == 0, 1.0, a1)))
            lg0 = np.log(np.abs(np.where(a0 == 0, 1.0, a0)))
            total += np.where(use, (w1[k] - w0[k]) + wx * (lg1 - lg0), 0.0)
        out[sl] = total
    return out


def _chunks(n_points, n_segments, budget=2_000_000):
    step = max(1, budget // max(1, n_segments))
    for start in range(0, n_points, step):
        yield slice(start, min(n_points, start + step))


# -- evaluation helpers shared with adtheory ---------------------------------

def _has_ac(m: SpectralMeasure) -> bool:
    return m.ac.mass() > 0.0


def _borel_at(m: SpectralMeasure, offset, anchor: float = 0.0):
    """F(anchor + offset) with no validation; offset is an array."""
    offset = np.atleast_1d(offset)
    nodes, values = m.ac.segments()
    total = _ac_cauchy(nodes, values, anchor, offset) if _has_ac(m) else np.zeros(offset.shape, offset.dtype)
    if m.atoms:
        d = (m.atom_locations - anchor)[None, :] - offset[:, None]
        total = total + np.sum(m.atom_masses[None, :] / d, axis=1)
    return total


def _g_at(m: SpectralMeasure, offset, anchor: float = 0.0):
    """G(anchor + offset) for real points off the closed support (no validation)."""
    offset = np.atleast_1d(np.asarray(offset, dtype=float))
    nodes, values = m.ac.segments()
    total = _ac_cauchy_sq(nodes, values, anchor, offset) if _has_ac(m) else np.zeros(offset.shape)
    if m.atoms:
        d = (m.atom_locations - anchor)[None, :] - offset[:, None]
        total = total + np.sum(m.atom_masses[None, :] / (d * d), axis=1)
    return total


# -- public operations -------------------------------------------------------

def borel(m: SpectralMeasure, z):
    """Borel transform ``F(z) = int dmu(t) / (t - z)``.

    ``z`` may be complex or real, scalar or array.  Real points on the closed
    a.c. support or at an atom are rejected; use :func:`boundary_value` there.
    """
    zarr = np.atleast_1d(np.asarray(z))
    zc = zarr.astype(complex).ravel()
    real = zc.imag == 0
    if np.any(real):
        xr = zc.real[real]
        lo, hi = m.support
        if _has_ac(m) and np.any((xr >= lo) & (xr <= hi)):
            raise SingularPointError("point lies on the a.c. support; use boundary_value")
        if m.atoms and np.any(np.isin(xr, m.atom_locations)):
            raise SingularPointError("point is an atom of the measure; use boundary_value")
    out = _borel_at(m, zc)
    if np.all(real):
        out = out.real
    if np.ndim(z) == 0:
        return out[0].item()
    return out.reshape(np.shape(z))


def boundary_value(m: SpectralMeasure, x) -> BoundaryValue:
    """``F(x + i0)`` split into its principal value and the a.c. density at ``x``."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = m.support
    if np.any((xs == lo) | (xs == hi)):
        raise SingularPointError("endpoint singularity: boundary value at a support endpoint")
    if m.atoms and np.any(np.isin(xs, m.atom_locations)):
        raise SingularPointError("boundary value at an atom is infinite")
    inside = (xs > lo) & (xs < hi)
    principal = np.empty(xs.shape)
    nodes, values = m.ac.segments()
    if np.any(inside):
        principal[inside] = _ac_principal(nodes, values, xs[inside])
        if m.atoms:
            d = m.atom_locations[None, :] - xs[inside][:, None]
            principal[inside] += np.sum(m.atom_masses[None, :] / d, axis=1)
    if np.any(~inside):
        principal[~inside] = _borel_at(m, xs[~inside]).real
    density = np.where(inside, m.ac.density(xs), 0.0)
    if np.ndim(x) == 0:
        return BoundaryValue(float(principal[0]), float(density[0]))
    return BoundaryValue(principal.reshape(np.shape(x)), density.reshape(np.shape(x)))


def g_transform(m: SpectralMeasure, x):
    """``G(x) = int dmu(y) / (y - x)^2``; ``inf`` on the closed a.c. support and at atoms."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = m.support
    infinite = np.zeros(xs.shape, dtype=bool)
    if _has_ac(m):
        infinite |= (xs >= lo) & (xs <= hi)
    if m.atoms:
        infinite |= np.isin(xs, m.atom_locations)
    out = np.full(xs.shape, np.inf)
    if np.any(~infinite):
        out[~infinite] = _g_at(m, xs[~infinite])
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def krein_shift(F_val, alpha: float):
    """Perturbed transform ``F_alpha = F / (1 + alpha F)``."""
    F_val = np.asarray(F_val)
    denom = 1.0 + alpha * F_val
    if np.any(denom == 0):
        raise PerturbationPole("1 + alpha*F = 0: pole of the perturbed transform (eigenvalue condition)")
    out = F_val / denom
    return out.item() if out.ndim == 0 else out


def perturbed_ac_density(m: SpectralMeasure, alpha: float, x):
    """Density of the a.c. part of ``mu_alpha``: ``Im F / (pi |1 + alpha F|^2)`` at ``x + i0``."""
    bv = boundary_value(m, x)
    p = np.asarray(bv.principal)
    d = np.asarray(bv.density)
    out = d / ((1.0 + alpha * p) ** 2 + (alpha * np.pi * d) ** 2)
    return float(out) if out.ndim == 0 else out


def representation_apply(m: SpectralMeasure, alpha: float, f: Callable, s,
                         df: Callable | None = None, n_grid: int = 4097,
                         diff_step: float = 1e-6) -> np.ndarray:
    """Apply ``V_alpha f(s) = f(s) - alpha int (f(s) - f(t)) / (s - t) dmu(t)``.

    ``f`` is a vectorised C^1 callable.  The a.c. integral uses the trapezoid
    rule on ``n_grid`` equispaced points of the support; where ``t == s`` the
    difference quotient is replaced by ``f'(s)`` (``df`` if given, else a
    centred difference with step ``diff_step``).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    fs = np.asarray(f(s), dtype=float)
    if not np.all(np.isfinite(fs)):
        raise NumericalError("representation_apply: non-finite samples of f")
    if alpha == 0.0:
        return fs.copy()
    if df is None:
        def df(x):
            return (f(x + diff_step) - f(x - diff_step)) / (2 * diff_step)
    lo, hi = m.support
    t = np.linspace(lo, hi, n_grid)
    wq = np.full(n_grid, (hi - lo) / (n_grid - 1))
    wq[0] *= 0.5
    wq[-1] *= 0.5
    wq = wq * m.ac.density(t)
    ft = np.asarray(f(t), dtype=float)
    if not np.all(np.isfinite(ft)):
        raise NumericalError("representation_apply: non-finite samples of f")
    dfs = np.asarray(df(s), dtype=float)
    integral = np.empty(s.shape)
    for sl in _chunks(s.size, t.size):
        diff = s[sl, None] - t[None, :]
        near = np.abs(diff) <= 1e-12 * max(1.0, abs(lo), abs(hi))
        q = np.where(near, dfs[sl, None], (fs[sl, None] - ft[None, :]) / np.where(near, 1.0, diff))
        integral[sl] = q @ wq
    if m.atoms:
        xa, ma = m.atom_locations, m.atom_masses
        fa = np.asarray(f(xa), dtype=float)
        diff = s[:, None] - xa[None, :]
        near = diff == 0
        q = np.where(near, dfs[:, None], (fs[:, None] - fa[None, :]) / np.where(near, 1.0, diff))
        integral += q @ ma
    out = fs - alpha * integral
    if not np.all(np.isfinite(out)):
        raise NumericalError("representation_apply produced non-finite values")
    return out


# -- quadrature route ----------------------------------------------------------

def _quad_ac(m: SpectralMeasure, kernel, anchor: float, epsabs: float):
    """``int w(t) kernel(t - anchor) dt`` with breakpoints graded towards ``anchor``."""
    nodes, values = m.ac.segments()
    u_nodes = nodes - anchor
    lo, hi = u_nodes[0], u_nodes[-1]
    brk = list(u_nodes[1:-1])
    for edge, sign in ((lo, 1.0), (hi, -1.0)):
        if abs(edge) < 0.5 * (hi - lo):
            brk += list(edge + sign * np.geomspace(1e-20, 0.5 * (hi - lo), 41))

    def integrand(u):
        return np.interp(u, u_nodes, values) * kernel(u)

    return adaptive_quad(integrand, lo, hi, epsabs=epsabs, breakpoints=brk).value


def borel_quad(m: SpectralMeasure, z: complex, anchor: float = 0.0, epsabs: float = 1e-13) -> complex:
    """``F(anchor + z)`` by adaptive Gauss-Kronrod on the defining integral plus the atom sum.

    An independent route to :func:`borel` for points off the support.
    """
    z = complex(z)
    val = _quad_ac(m, lambda u: 1.0 / (u - z), anchor, epsabs) if _has_ac(m) else 0.0
    return complex(val + np.sum(m.atom_masses / (m.atom_locations - anchor - z)))


def g_quad(m: SpectralMeasure, x: float, anchor: float = 0.0, epsabs: float = 1e-13) -> float:
    """``G(anchor + x)`` by adaptive Gauss-Kronrod, for real points off the closed support."""
    val = _quad_ac(m, lambda u: 1.0 / (u - x) ** 2, anchor, epsabs) if _has_ac(m) else 0.0
    return float(np.real(val) + np.sum(m.atom_masses / (m.atom_locations - anchor - x) ** 2))

"""Lower bounds on the a.c. mass lost (and singular mass gained) under a
rank-one perturbation whose direction overlaps the point masses only slightly,
with a harness that checks them against the perturbation engine.

Masses are measured in the spectral measure of the direction vector,
``nu = |phi|^2 mu``, so ``||nu|| = ||phi||^2 = 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .adtheory import perturb, solve_eigenvalue
from .measures import AcPart, Grid, PointMass, SpectralMeasure

__all__ = [
    "BoundScenario",
    "BoundCheck",
    "d_lower_bound",
    "k_margin",
    "rademacher_corollary_terms",
    "rademacher_corollary_bound",
    "random_scenario",
    "h_lambda",
    "minimize_h",
    "verify_ac_bound",
    "verify_singular_bound",
    "scenario_to_dict",
    "scenario_from_dict",
]

N_LAMBDA = 101
BOUNDS_REFINE_TOL = 1e-10


def d_lower_bound(a: float, c: float, eps: float, lambda_max: float) -> float:
    """``(1 - c) / (a + lambda_max (1 - eps) + 1)^2``."""
    if not (a > 0 and 0 <= c < 1 and 0 <= eps <= 1 and lambda_max > 0):
        raise ValueError("need a > 0, 0 <= c < 1, 0 <= eps <= 1, lambda_max > 0")
    return (1.0 - c) / (a + lambda_max * (1.0 - eps) + 1.0) ** 2


def k_margin(d: float, lambda_abs: float, eps: float) -> float:
    """``d - |lambda| sqrt(eps (1 - eps))``; the bounds say something only when positive."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    return d - abs(lambda_abs) * math.sqrt(eps * (1.0 - eps))


def rademacher_corollary_terms(lam: float, tau_n: float, eps: float) -> dict:
    """Both terms of the bracket, literally (``e^u`` forms) and in sinh form.

    ``u = 1/(lambda tau_N)``; first term ``e^u / (lambda^2 tau (e^u - 1)^2)
    = 1 / (4 lambda^2 tau sinh^2(u/2))``, second term ``first * lambda sqrt(eps)``.
    The literal forms overflow to ``nan`` for large ``|u|``.
    """
    if lam == 0 or not tau_n > 0:
        raise ValueError("need lambda != 0 and tau_N > 0")
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    u = 1.0 / (lam * tau_n)
    au = abs(u)
    if au <= 30:
        first = 1.0 / (4.0 * lam * lam * tau_n * math.sinh(0.5 * au) ** 2)
    else:
        first = math.exp(-au - 2.0 * math.log1p(-math.exp(-au)) - math.log(lam * lam * tau_n))
    second = first * lam * math.sqrt(eps)
    try:
        eu = math.exp(u)
        lit_first = eu / (lam * lam * tau_n * (eu - 1.0) ** 2)
        lit_second = eu * math.sqrt(eps) / (lam * tau_n * (eu - 1.0) ** 2)
    except OverflowError:
        lit_first = lit_second = float("nan")
    return {"first": first, "second": second, "literal_first": lit_first,
            "literal_second": lit_second, "bound": first - second}


def rademacher_corollary_bound(lam: float, tau_n: float, eps: float) -> float:
    """``first * (1 - lambda sqrt(eps))`` in the stable form."""
    return rademacher_corollary_terms(lam, tau_n, eps)["bound"]


# -- scenarios -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundScenario:
    """A measure ``f dx + sum m_j delta_{x_j}`` with a direction ``phi``.

    ``phi`` is stored by value: ``phi_nodes`` on the nodes of ``f`` (linear in
    between, zero outside ``[-a, a]``) and ``phi_atoms`` at the atoms.
    """

    a: float
    c: float
    eps: float
    lambda_interval: tuple[float, float]
    nodes: np.ndarray
    f_values: np.ndarray
    phi_nodes: np.ndarray
    atoms: tuple[PointMass, ...] = field(default=())
    phi_atoms: tuple[float, ...] = field(default=())

    def __post_init__(self):
        lo, hi = self.lambda_interval
        if not lo < hi or lo <= 0 <= hi:
            raise ValueError("lambda interval must be compact, ordered and exclude 0")
        if not (self.a > 0 and 0 <= self.c < 1 and 0 <= self.eps <= 1):
            raise ValueError("need a > 0, 0 <= c < 1, 0 <= eps <= 1")
        if len(self.atoms) != len(self.phi_atoms):
            raise ValueError("one phi value per atom")
        if any(abs(p.location) <= self.a for p in self.atoms):
            raise ValueError("atoms must lie outside [-a, a]")
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "f_values", np.asarray(self.f_values, dtype=float))
        object.__setattr__(self, "phi_nodes", np.asarray(self.phi_nodes, dtype=float))

    @property
    def mu(self) -> SpectralMeasure:
        return SpectralMeasure(AcPart((-self.a, self.a), Grid(self.nodes, self.f_values)), self.atoms)

    @property
    def overlap(self) -> float:
        return float(sum(p.mass * v * v for p, v in zip(self.atoms, self.phi_atoms)))

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) <= self.a, np.interp(x, self.nodes, self.phi_nodes), 0.0)
        for p, v in zip(self.atoms, self.phi_atoms):
            out = np.where(x == p.location, v, out)
        return out

    def nu(self) -> SpectralMeasure:
        """``|phi|^2 mu`` on the nodes of ``f``; atoms with ``phi = 0`` are dropped."""
        ac = AcPart((-self.a, self.a), Grid(self.nodes, self.phi_nodes ** 2 * self.f_values))
        atoms = tuple(PointMass(p.location, p.mass * v * v)
                      for p, v in zip(self.atoms, self.phi_atoms) if v != 0)
        return SpectralMeasure(ac, atoms)

    def nu_tilde(self) -> SpectralMeasure:
        """The part of ``nu`` carried by ``phi`` restricted to ``[-a, a]``."""
        return SpectralMeasure(self.nu().ac, ())


def random_scenario(rng: np.random.Generator, n_nodes: int = 33) -> BoundScenario:
    """Random scenario with ``||mu|| = 1`` and ``||phi||^2 = 1`` (trapezoid on the nodes)."""
    a = float(rng.uniform(0.5, 1.5))
    c = float(rng.uniform(0.0, 0.6))
    eps = float(rng.uniform(0.0, 0.5))
    lam_lo = float(rng.uniform(0.2, 1.0))
    lam_hi = lam_lo + float(rng.uniform(0.2, 2.0))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    interval = (lam_lo, lam_hi) if sign > 0 else (-lam_hi, -lam_lo)

    nodes = np.linspace(-a, a, n_nodes)
    f = 0.3 + rng.random(n_nodes)
    f *= (1.0 - c) / np.trapezoid(f, nodes)

    n_atoms = int(rng.integers(1, 4)) if c > 0 else 0
    locs = set()
    while len(locs) < n_atoms:
        side = 1.0 if rng.random() < 0.5 else -1.0
        locs.add(side * float(rng.uniform(a + 0.1, a + 2.0)))
    locs = sorted(locs)
    masses = rng.dirichlet(np.ones(n_atoms)) * c if n_atoms else np.empty(0)

    overlap = eps * float(rng.uniform(0.5, 1.0)) if n_atoms else 0.0
    raw = rng.random(n_atoms) + 0.1
    scale = math.sqrt(overlap / float(np.sum(masses * raw ** 2))) if n_atoms and overlap > 0 else 0.0
    phi_atoms = tuple(float(v) for v in raw * scale)

    phi_t = 0.5 + rng.random(n_nodes)
    phi_t *= math.sqrt((1.0 - overlap) / np.trapezoid(phi_t ** 2 * f, nodes))
    atoms = tuple(PointMass(x, float(m)) for x, m in zip(locs, masses))
    return BoundScenario(a, c, eps, interval, nodes, f, phi_t, atoms, phi_atoms)


# -- h(lambda) and d -----------------------------------------------------------

def h_lambda(s: BoundScenario, lam: float) -> float:
    """Mass of the eigenvalue that coupling ``lam`` creates from ``phi~``-induced a.c. measure."""
    return solve_eigenvalue(s.nu_tilde(), lam).mass


def minimize_h(s: BoundScenario, n: int = N_LAMBDA) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Grid minimum of ``h`` over the lambda interval, refined by golden section.

    Returns ``(d, lambda_at_min, lambda_grid, h_grid)``.
    """
    lo, hi = s.lambda_interval
    lams = np.linspace(lo, hi, n)
    hs = np.array([h_lambda(s, float(x)) for x in lams])
    i = int(np.argmin(hs))
    if 0 < i < n - 1:
        res = optimize.minimize_scalar(lambda x: h_lambda(s, float(x)),
                                       bracket=(lams[i - 1], lams[i], lams[i + 1]), method="golden",
                                       options={"xtol": 1e-8})
        if res.fun < hs[i] and lams[i - 1] <= res.x <= lams[i + 1]:
            return float(res.fun), float(res.x), lams, hs
    return float(hs[i]), float(lams[i]), lams, hs


@dataclass
class BoundCheck:
    d: float
    d_lower: float
    k: float
    measured_loss: float
    measured_gain: float
    holds: bool | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _measure(s: BoundScenario, lam: float, refine_tol: float):
    nu = s.nu()
    out = perturb(nu, lam, refine_tol=refine_tol)
    loss = nu.ac.mass() - out.ac.mass()
    gain = float(out.atom_masses.sum() - nu.atom_masses.sum())
    return loss, gain


def _check(s: BoundScenario, lam: float, which: str, d: float | None, refine_tol: float) -> BoundCheck:
    lo, hi = s.lambda_interval
    if not lo <= lam <= hi:
        raise ValueError(f"lambda {lam} outside the scenario interval {s.lambda_interval}")
    if d is None:
        d = minimize_h(s)[0]
    k = k_margin(d, lam, s.eps)
    lam_max = max(abs(lo), abs(hi))
    d_low = d_lower_bound(s.a, s.c, s.eps, lam_max)
    loss, gain = _measure(s, lam, refine_tol)
    measured = loss if which == "ac" else gain
    holds = None if k <= 0 else bool(measured >= k - 1e-8)
    return BoundCheck(d, d_low, k, loss, gain, holds)


def verify_ac_bound(s: BoundScenario, lam: float, d: float | None = None,
                    refine_tol: float = BOUNDS_REFINE_TOL) -> BoundCheck:
    """Check ``||(nu_lambda)_ac|| <= ||nu_ac|| - k``; ``holds`` is ``None`` when ``k <= 0``."""
    return _check(s, lam, "ac", d, refine_tol)


def verify_singular_bound(s: BoundScenario, lam: float, d: float | None = None,
                          refine_tol: float = BOUNDS_REFINE_TOL) -> BoundCheck:
    """Check ``||(nu_lambda)_s|| >= ||nu_s|| + k``; ``holds`` is ``None`` when ``k <= 0``."""
    return _check(s, lam, "singular", d, refine_tol)


# -- JSON ------------------------------------------------------------------------

_KEYS = {"a", "c", "eps", "lambda_interval", "nodes", "f_values", "phi_nodes", "atoms"}


def scenario_to_dict(s: BoundScenario) -> dict:
    return {
        "a": s.a, "c": s.c, "eps": s.eps, "lambda_interval": list(s.lambda_interval),
        "nodes": s.nodes.tolist(), "f_values": s.f_values.tolist(), "phi_nodes": s.phi_nodes.tolist(),
        "atoms": [{"x": p.location, "m": p.mass, "phi": v} for p, v in zip(s.atoms, s.phi_atoms)],
    }


def scenario_from_dict(d: dict) -> BoundScenario:
    unknown = set(d) - _KEYS
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    atoms = d.get("atoms", [])
    return BoundScenario(float(d["a"]), float(d["c"]), float(d["eps"]),
                         tuple(float(v) for v in d["lambda_interval"]),
                         d["nodes"], d["f_values"], d["phi_nodes"],
                         tuple(PointMass(float(p["x"]), float(p["m"])) for p in atoms),
                         tuple(float(p["phi"]) for p in atoms))


def dump_scenario(s: BoundScenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=1)


def load_scenario(path) -> BoundScenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))

"""The tau cascade: iterated rank-one perturbations of a flattened box measure.

Each step couples the current box ``tau_k * chi_[-1,1]`` with a fresh random
coupling, records the created eigenvalue, and flattens the remaining a.c. mass
back onto ``[-1, 1]``.  The whole state is ``(tau_k, ledger)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adtheory import Eigenvalue, box_eigenvalue_closed
from .errors import Localized

__all__ = [
    "CouplingDistribution",
    "CascadeState",
    "Trajectory",
    "LocalizationReport",
    "TAU0",
    "TAU_FLOOR",
    "step",
    "run_trajectory",
    "remaining_ac_mass",
    "localization_report",
]

TAU0 = 0.5
TAU_FLOOR = 1e-12
KINDS = ("rademacher", "uniform_symmetric", "two_point", "fixed")
_ZERO_RESAMPLE = 1e-9


@dataclass(frozen=True)
class CouplingDistribution:
    """Sampling rule for i.i.d. couplings.

    ``rademacher``: +-c with probability 1/2.  ``uniform_symmetric``: uniform
    on ``[-c, c]`` with ``|alpha| < 1e-9`` resampled.  ``two_point``: ``a`` with
    probability ``p``, else ``b``.  ``fixed``: ``values`` cycled.
    """

    kind: str
    c: float = 1.0
    a: float = 0.0
    b: float = 0.0
    p: float = 0.5
    values: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}; allowed: {', '.join(KINDS)}")
        if self.kind in ("rademacher", "uniform_symmetric") and not self.c > 0:
            raise ValueError("c must be positive")
        if self.kind == "two_point":
            if not 0 <= self.p <= 1:
                raise ValueError("p must lie in [0, 1]")
            if (self.a == 0 and self.p > 0) or (self.b == 0 and self.p < 1):
                raise ValueError("two_point values must be nonzero")
        if self.kind == "fixed":
            if not self.values:
                raise ValueError("fixed distribution needs at least one value")
            if any(v == 0 for v in self.values):
                raise ValueError("fixed couplings must be nonzero")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def generator(self, trajectory: int = 0) -> np.random.Generator:
        """Counter-based stream keyed by ``(seed, trajectory)``; the step index is the draw counter."""
        key = (int(self.seed) << 64) | int(trajectory)
        return np.random.Generator(np.random.Philox(key=key))

    def sample(self, n: int, trajectory: int = 0) -> np.ndarray:
        """First ``n`` couplings of trajectory ``trajectory``."""
        if self.kind == "fixed":
            return np.resize(np.array(self.values), n)
        rng = self.generator(trajectory)
        if self.kind == "rademacher":
            return np.where(rng.random(n) < 0.5, -self.c, self.c)
        if self.kind == "two_point":
            return np.where(rng.random(n) < self.p, self.a, self.b)
        out = rng.uniform(-self.c, self.c, n)
        bad = np.abs(out) < _ZERO_RESAMPLE
        while np.any(bad):
            out[bad] = rng.uniform(-self.c, self.c, int(bad.sum()))
            bad = np.abs(out) < _ZERO_RESAMPLE
        return out


@dataclass(frozen=True)
class CascadeState:
    step: int
    tau: float
    ledger: tuple[Eigenvalue, ...] = field(default=())

    @property
    def ac_mass(self) -> float:
        return 2.0 * self.tau


def step(state: CascadeState, alpha: float, tau_floor: float = TAU_FLOOR) -> CascadeState:
    """One coupling: ``tau_{k+1} = tau_k - m/2`` with ``m`` the created eigenvalue mass."""
    if alpha == 0:
        raise ValueError("alpha = 0: no perturbation")
    if state.tau <= tau_floor:
        raise Localized(f"tau = {state.tau:.3e} at or below floor {tau_floor:.1e}; trajectory localized")
    eig = box_eigenvalue_closed(state.tau, alpha)
    tau_next = state.tau - 0.5 * eig.mass
    return CascadeState(state.step + 1, tau_next, state.ledger + (eig,))


class Trajectory(Sequence):
    """Array-backed record of one cascade run.

    Indexing yields :class:`CascadeState` objects built on demand so long runs
    do not hold a quadratic number of ledger tuples.
    """

    def __init__(self, alphas, locations, masses, taus, gaps):
        self.alpha = np.asarray(alphas, dtype=float)
        self.location = np.asarray(locations, dtype=float)
        self.mass = np.asarray(masses, dtype=float)
        self.tau = np.asarray(taus, dtype=float)  # tau[0] = tau_0, len = steps + 1
        self.gap = np.asarray(gaps, dtype=float)

    @property
    def steps(self) -> int:
        return self.alpha.size

    @property
    def ac_mass(self) -> np.ndarray:
        return 2.0 * self.tau

    def eigenvalue(self, i: int) -> Eigenvalue:
        return Eigenvalue(float(self.location[i]), float(self.mass[i]), float(self.alpha[i]),
                          float(self.gap[i]))

    def __len__(self):
        return self.tau.size

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        return CascadeState(k, float(self.tau[k]), tuple(self.eigenvalue(i) for i in range(k)))


def run_trajectory(dist: CouplingDistribution, max_steps: int, tau_floor: float = TAU_FLOOR,
                   trajectory: int = 0, tau0: float = TAU0) -> Trajectory:
    """Iterate :func:`step` with sampled couplings until ``max_steps`` or ``tau <= tau_floor``."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    alphas = dist.sample(max_steps, trajectory)
    taus = np.empty(max_steps + 1)
    locs = np.empty(max_steps)
    masses = np.empty(max_steps)
    gaps = np.empty(max_steps)
    taus[0] = tau = tau0
    n = 0
    for k in range(max_steps):
        if tau <= tau_floor:
            break
        eig = box_eigenvalue_closed(tau, float(alphas[k]))
        tau = tau - 0.5 * eig.mass
        locs[k], masses[k], gaps[k] = eig.location, eig.mass, eig.gap
        taus[k + 1] = tau
        n = k + 1
    return Trajectory(alphas[:n], locs[:n], masses[:n], taus[:n + 1], gaps[:n])


def remaining_ac_mass(states) -> float:
    """``1 - sum of ledger masses`` for a trajectory or a list of states."""
    if isinstance(states, Trajectory):
        return float(1.0 - np.sum(states.mass))
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    return 1.0 - float(sum(e.mass for e in states[-1].ledger))


@dataclass
class LocalizationReport:
    localized: bool
    steps_to_target: int | None
    tau_curve: np.ndarray
    final_tau: float

    def to_dict(self, curve_stride: int = 1) -> dict:
        return {
            "localized": self.localized,
            "steps_to_target": self.steps_to_target,
            "final_tau": self.final_tau,
            "steps_run": int(self.tau_curve.size - 1),
            "tau_curve": self.tau_curve[::curve_stride].tolist(),
        }


def localization_report(dist: CouplingDistribution, tau_target: float, max_steps: int,
                        tau_floor: float = TAU_FLOOR, trajectory: int = 0) -> LocalizationReport:
    """First ``k`` with ``tau_k < tau_target``, or ``None`` within ``max_steps``."""
    traj = run_trajectory(dist, max_steps, tau_floor, trajectory)
    below = np.flatnonzero(traj.tau < tau_target)
    hit = int(below[0]) if below.size else None
    return LocalizationReport(hit is not None, hit, traj.tau, float(traj.tau[-1]))

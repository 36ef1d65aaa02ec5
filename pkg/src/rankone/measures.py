"""Positive Borel measures made of an absolutely continuous weight on a compact
interval plus finitely many point masses.

The weight is either a constant level (``Box``) or a piecewise-linear
interpolant of nodal values (``Grid``). Both are exposed to the numerical
kernels through :meth:`AcPart.segments`, so a box is just a one-segment grid.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import Localized

__all__ = [
    "Box",
    "Grid",
    "AcPart",
    "PointMass",
    "SpectralMeasure",
    "box_measure",
    "grid_measure",
    "total_mass",
    "ac_mass",
    "scale_to_box",
    "measure_to_dict",
    "measure_from_dict",
    "dump_measure",
    "load_measure",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Box:
    level: float

    def __post_init__(self):
        if not np.isfinite(self.level) or self.level < 0:
            raise ValueError(f"box level must be finite and >= 0, got {self.level}")


@dataclass(frozen=True, eq=False)
class Grid:
    """Piecewise-linear weight through ``(nodes[i], values[i])``."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = _frozen_array(self.nodes)
        values = _frozen_array(self.values)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ValueError("grid needs matching 1-d nodes/values with at least two points")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise ValueError("grid nodes and values must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("grid values must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.values, other.values)

    __hash__ = None


Weight = Union[Box, Grid]


@dataclass(frozen=True)
class AcPart:
    support: tuple[float, float]
    weight: Weight

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"support must be a finite interval with lo < hi, got {self.support}")
        object.__setattr__(self, "support", (lo, hi))
        if isinstance(self.weight, Grid):
            nodes = self.weight.nodes
            if nodes[0] != lo or nodes[-1] != hi:
                raise ValueError("grid nodes must start and end at the support endpoints")
        elif not isinstance(self.weight, Box):
            raise TypeError(f"unsupported weight type {type(self.weight).__name__}")

    @property
    def is_box(self) -> bool:
        return isinstance(self.weight, Box)

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and nodal values of the weight, a box giving two equal values."""
        if self.is_box:
            lvl = self.weight.level
            return np.array(self.support), np.array([lvl, lvl])
        return self.weight.nodes, self.weight.values

    def mass(self) -> float:
        if self.is_box:
            return self.weight.level * self.width
        return float(np.trapezoid(self.weight.values, self.weight.nodes))

    def density(self, x):
        """Weight at ``x``; zero off the support."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        if self.is_box:
            out = np.where(inside, self.weight.level, 0.0)
        else:
            out = np.where(inside, np.interp(x, self.weight.nodes, self.weight.values), 0.0)
        return out if out.ndim else float(out)

    def is_empty(self) -> bool:
        return self.mass() == 0.0


@dataclass(frozen=True)
class PointMass:
    location: float
    mass: float

    def __post_init__(self):
        if not np.isfinite(self.location):
            raise ValueError("atom location must be finite")
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ValueError(f"atom mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class SpectralMeasure:
    ac: AcPart
    atoms: tuple[PointMass, ...] = field(default=())

    def __post_init__(self):
        atoms = tuple(sorted(self.atoms, key=lambda a: a.location))
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([a.location for a in self.atoms], dtype=float)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([a.mass for a in self.atoms], dtype=float)

    @property
    def support(self) -> tuple[float, float]:
        return self.ac.support

    def with_atoms(self, atoms: Iterable[PointMass]) -> "SpectralMeasure":
        return SpectralMeasure(self.ac, tuple(atoms))


def box_measure(tau: float, support: Sequence[float] = (-1.0, 1.0),
                atoms: Iterable[tuple[float, float]] = ()) -> SpectralMeasure:
    """``tau * chi_support dx`` plus atoms given as ``(location, mass)`` pairs."""
    return SpectralMeasure(AcPart(tuple(support), Box(float(tau))),
                           tuple(PointMass(float(x), float(m)) for x, m in atoms))


def grid_measure(nodes, values, atoms: Iterable[tuple[float, float]] = ()) -> SpectralMeasure:
    nodes = np.asarray(nodes, dtype=float)
    return SpectralMeasure(AcPart((nodes[0], nodes[-1]), Grid(nodes, values)),
                           tuple(PointMass(float(x), float(m)) for x, m in atoms))


def total_mass(m: SpectralMeasure) -> float:
    return ac_mass(m) + float(sum(a.mass for a in m.atoms))


def ac_mass(m: SpectralMeasure) -> float:
    """Integral of the weight: ``level * width`` for a box, trapezoid rule on a grid."""
    return m.ac.mass()


def scale_to_box(m: SpectralMeasure) -> tuple[AcPart, float]:
    """Flatten the a.c. part to the box of equal mass on the same support.

    Returns the box and its level ``tau = ac_mass / width``. Atoms are left
    alone; they live in an orthogonal summand.
    """
    mass = ac_mass(m)
    if mass <= 0.0:
        raise Localized("absolutely continuous mass is zero; the cascade terminates")
    tau = mass / m.ac.width
    return AcPart(m.ac.support, Box(tau)), tau


# -- JSON ---------------------------------------------------------------------

def measure_to_dict(m: SpectralMeasure) -> dict:
    if m.ac.is_box:
        ac = {"type": "box", "tau": m.ac.weight.level, "support": list(m.ac.support)}
    else:
        ac = {"type": "grid", "nodes": m.ac.weight.nodes.tolist(),
              "values": m.ac.weight.values.tolist()}
    return {"ac": ac, "atoms": [{"x": a.location, "m": a.mass} for a in m.atoms]}


def measure_from_dict(d: dict) -> SpectralMeasure:
    unknown = set(d) - {"ac", "atoms"}
    if unknown:
        raise ValueError(f"unknown measure keys: {sorted(unknown)}")
    ac = d["ac"]
    atoms = tuple(PointMass(float(a["x"]), float(a["m"])) for a in d.get("atoms", []))
    kind = ac.get("type")
    if kind == "box":
        part = AcPart(tuple(ac.get("support", (-1.0, 1.0))), Box(float(ac["tau"])))
    elif kind == "grid":
        nodes = np.asarray(ac["nodes"], dtype=float)
        part = AcPart((nodes[0], nodes[-1]), Grid(nodes, ac["values"]))
    else:
        raise ValueError(f"unknown a.c. weight type {kind!r}; expected 'box' or 'grid'")
    return SpectralMeasure(part, atoms)


def dump_measure(m: SpectralMeasure, path) -> None:
    with open(path, "w") as fh:
        json.dump(measure_to_dict(m), fh, indent=1)


def load_measure(path) -> SpectralMeasure:
    with open(path) as fh:
        return measure_from_dict(json.load(fh))

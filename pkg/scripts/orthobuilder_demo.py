"""Build sign functions orthogonal to {1, t, t^2, sin(pi t)} and log the residual per level."""
import argparse
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rankone.errors import ConvergenceWarning
from rankone.measures import box_measure, grid_measure
from rankone.orthobuilder import build_sign_function


@dataclass
class Config:
    tol: float = 1e-6
    max_level: int = 24
    out: Path = field(default=Path("results/orthobuilder.json"))


FAMILY = {"1": lambda t: np.ones_like(t), "t": lambda t: t, "t^2": lambda t: t ** 2,
          "sin(pi t)": lambda t: np.sin(np.pi * t)}


def measures():
    nodes = np.linspace(-1, 1, 9)
    return {"lebesgue/2": box_measure(0.5),
            "mixed": grid_measure(nodes, 0.3 + 0.1 * nodes ** 2, [(-0.5, 0.15), (0.5, 0.1)])}


def run(cfg: Config) -> dict:
    out = {}
    for name, eta in measures().items():
        for correct in (False, True):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                h = build_sign_function(list(FAMILY.values()), eta, cfg.tol, cfg.max_level, correct=correct)
            out[f"{name}, correction={'on' if correct else 'off'}"] = {
                "converged": h.converged, "level": h.level, "residual": h.residual,
                "cells": int(h.breakpoints.size), "history": list(h.history)}
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    cfg.out.write_text(json.dumps(out, indent=1) + "\n")
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=Config.tol)
    ap.add_argument("--max-level", type=int, default=Config.max_level)
    ap.add_argument("--out", type=Path, default=Path("results/orthobuilder.json"))
    args = ap.parse_args()
    for key, r in run(Config(args.tol, args.max_level, args.out)).items():
        print(f"{key:<32} converged={r['converged']!s:<5} level={r['level']:<3} "
              f"residual={r['residual']:.2e} cells={r['cells']}")


if __name__ == "__main__":
    main()

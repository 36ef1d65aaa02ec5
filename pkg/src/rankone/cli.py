"""Command line front end: ``rankone <group> <command> [options]``.

Exit status 0 on success, 2 for invalid input or configuration, 3 when a
numerical kernel fails or produces a non-finite value.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, RankOneError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class InvalidInput(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Validated parameters of one invocation."""

    command: str
    params: dict
    out: str | None = None
    svg: str | None = None


@dataclass
class RunManifest:
    config: dict
    version: str
    seeds: list
    wall_time: float
    outputs: dict = field(default_factory=dict)


# -- helpers ------------------------------------------------------------------------

def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(cfg: ExperimentConfig, seeds, t0: float, outputs) -> None:
    primary = Path(outputs[0])
    manifest = RunManifest(asdict(cfg), __version__, list(seeds), time.perf_counter() - t0,
                           {str(p): _sha256(p) for p in outputs})
    with open(primary.with_name(primary.name + ".manifest.json"), "w") as fh:
        json.dump(asdict(manifest), fh, indent=1)


def _finite(op: str, *values) -> None:
    for v in values:
        arr = np.asarray(v, dtype=complex if np.iscomplexobj(v) else float)
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"{op}: non-finite result")


def _emit_json(cfg: ExperimentConfig, payload: dict, seeds=(), t0: float = 0.0) -> None:
    text = json.dumps(payload, indent=1)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
        _write_manifest(cfg, seeds, t0, [cfg.out] + ([cfg.svg] if cfg.svg else []))
    else:
        print(text)


def _load_json(path, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {what} {path}: {exc}") from exc


def _load_measure(path):
    from .measures import measure_from_dict
    try:
        return measure_from_dict(_load_json(path, "measure"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"invalid measure {path}: {exc}") from exc


def parse_complex(text: str) -> complex:
    """Accept ``0.5+1e-6i``, ``0.5+1e-6j`` or a plain real."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise InvalidInput(f"cannot parse complex number {text!r}") from exc


def _threads() -> int:
    raw = os.environ.get("RANKONE_THREADS", "")
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidInput(f"RANKONE_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InvalidInput("RANKONE_THREADS must be >= 1")
    return n


def _tau_svg(path, curves, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "rankone"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, tau in curves:
        ax.semilogy(np.arange(tau.size), tau, lw=1, label=label)
    ax.set_xlabel("step k")
    ax.set_ylabel(r"$\tau_k$")
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- commands ----------------------------------------------------------------------

def _distribution(p: dict):
    from .cascade import CouplingDistribution
    values = tuple(p.get("values") or ())
    try:
        return CouplingDistribution(p["dist"], c=p["c"], a=p["a"], b=p["b"], p=p["p"],
                                    values=values, seed=p["seed"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


def cmd_cascade_run(cfg: ExperimentConfig) -> None:
    from .cascade import run_trajectory
    p = cfg.params
    dist = _distribution(p)
    if p["steps"] < 1:
        raise InvalidInput("--steps must be >= 1")
    n_traj = p["trajectories"]
    if n_traj < 1:
        raise InvalidInput("--trajectories must be >= 1")
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=min(_threads(), n_traj)) as pool:
        trajs = list(pool.map(lambda i: run_trajectory(dist, p["steps"], p["tau_floor"], trajectory=i),
                              range(n_traj)))
    for tr in trajs:
        _finite("cascade run", tr.tau, tr.mass, tr.location)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["step", "alpha", "x_eig", "mass", "tau", "ac_mass"]
    writer.writerow((["trajectory"] if n_traj > 1 else []) + cols)
    for i, tr in enumerate(trajs):
        for k in range(tr.steps):
            row = [str(k + 1)] + ["{:.16e}".format(v) for v in
                                  (tr.alpha[k], tr.location[k], tr.mass[k], tr.tau[k + 1], 2.0 * tr.tau[k + 1])]
            writer.writerow(([str(i)] if n_traj > 1 else []) + row)
    if cfg.svg:
        _tau_svg(cfg.svg, [(f"trajectory {i}", tr.tau) for i, tr in enumerate(trajs)],
                 f"{p['dist']} cascade")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        _write_manifest(cfg, [p["seed"]], t0, [cfg.out] + ([cfg.svg] if cfg.svg else []))
    else:
        sys.stdout.write(buf.getvalue())


def cmd_cascade_localize(cfg: ExperimentConfig) -> None:
    from .cascade import localization_report
    p = cfg.params
    dist = _distribution(p)
    if not p["target"] > 0:
        raise InvalidInput("--target must be positive")
    if p["max_steps"] < 1:
        raise InvalidInput("--max-steps must be >= 1")
    t0 = time.perf_counter()
    rep = localization_report(dist, p["target"], p["max_steps"], p["tau_floor"])
    _finite("cascade localize", rep.tau_curve)
    stride = p["curve_stride"] or max(1, rep.tau_curve.size // 1000)
    payload = rep.to_dict(stride)
    payload["curve_stride"] = stride
    if cfg.svg:
        _tau_svg(cfg.svg, [("tau", rep.tau_curve)], f"{p['dist']} c={p['c']}")
    _emit_json(cfg, payload, [p["seed"]], t0)


def cmd_adtheory_perturb(cfg: ExperimentConfig) -> None:
    from .adtheory import perturb
    from .measures import dump_measure, measure_to_dict
    p = cfg.params
    m = _load_measure(p["measure"])
    t0 = time.perf_counter()
    try:
        out = perturb(m, p["alpha"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    d = measure_to_dict(out)
    _finite("adtheory perturb", [a["m"] for a in d["atoms"]], [a["x"] for a in d["atoms"]])
    if cfg.out:
        dump_measure(out, cfg.out)
        _write_manifest(cfg, [], t0, [cfg.out])
    else:
        print(json.dumps(d))


def cmd_transforms_eval(cfg: ExperimentConfig) -> None:
    from .transforms import borel
    p = cfg.params
    m = _load_measure(p["measure"])
    z = parse_complex(p["z"])
    val = complex(borel(m, z))
    _finite("transforms eval", val)
    _emit_json(cfg, {"re": val.real, "im": val.imag})


def cmd_transforms_boundary(cfg: ExperimentConfig) -> None:
    from .transforms import boundary_value
    p = cfg.params
    m = _load_measure(p["measure"])
    bv = boundary_value(m, p["x"])
    _finite("transforms boundary", bv.principal, bv.density)
    _emit_json(cfg, {"principal": float(bv.principal), "density": float(bv.density)})


def cmd_bounds_verify(cfg: ExperimentConfig) -> None:
    from .bounds import minimize_h, scenario_from_dict, verify_ac_bound
    p = cfg.params
    try:
        s = scenario_from_dict(_load_json(p["scenario"], "scenario"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"invalid scenario: {exc}") from exc
    lo, hi = s.lambda_interval
    if not lo <= p["lambda_"] <= hi:
        raise InvalidInput(f"lambda {p['lambda_']} outside the scenario interval [{lo}, {hi}]")
    t0 = time.perf_counter()
    d = minimize_h(s)[0]
    r = verify_ac_bound(s, p["lambda_"], d=d)
    _finite("bounds verify", r.d, r.k, r.measured_loss, r.measured_gain)
    _emit_json(cfg, {"d": r.d, "d_lower": r.d_lower, "k": r.k, "measured_loss": r.measured_loss,
                     "measured_gain": r.measured_gain, "holds": r.holds}, [], t0)


def cmd_bounds_dlower(cfg: ExperimentConfig) -> None:
    from .bounds import d_lower_bound
    p = cfg.params
    try:
        d = d_lower_bound(p["a"], p["c"], p["eps"], p["lambda_max"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    _emit_json(cfg, {"d_lower": d})


def cmd_bounds_scenario(cfg: ExperimentConfig) -> None:
    from .bounds import random_scenario, scenario_to_dict
    p = cfg.params
    s = random_scenario(np.random.default_rng(p["seed"]))
    _emit_json(cfg, scenario_to_dict(s), [p["seed"]], time.perf_counter())


_FUNC_KEYS = ({"expr"}, {"nodes", "values"})


def load_funcs(path):
    """``[{"expr": "sin(pi*t)"}, {"nodes": [...], "values": [...]}, ...]`` as callables of ``t``."""
    import sympy
    spec = _load_json(path, "function list")
    if not isinstance(spec, list) or not spec:
        raise InvalidInput("funcs file must hold a nonempty JSON list")
    t = sympy.Symbol("t")
    fns = []
    for item in spec:
        if not isinstance(item, dict) or set(item) not in _FUNC_KEYS:
            raise InvalidInput(f"each function needs exactly 'expr' or 'nodes'+'values', got {item!r}")
        if "expr" in item:
            try:
                expr = sympy.sympify(item["expr"])
            except (sympy.SympifyError, TypeError) as exc:
                raise InvalidInput(f"cannot parse {item['expr']!r}: {exc}") from exc
            extra = expr.free_symbols - {t}
            if extra:
                raise InvalidInput(f"expression {item['expr']!r} has unknown symbols {sorted(map(str, extra))}")
            f = sympy.lambdify(t, expr, "numpy")
            fns.append(lambda x, f=f: np.broadcast_to(np.asarray(f(x), dtype=float), np.shape(x)))
        else:
            nodes = np.asarray(item["nodes"], dtype=float)
            values = np.asarray(item["values"], dtype=float)
            if nodes.shape != values.shape or nodes.ndim != 1 or np.any(np.diff(nodes) <= 0):
                raise InvalidInput("sampled function needs matching, strictly increasing nodes")
            fns.append((nodes, values))
    return fns


def cmd_ortho_build(cfg: ExperimentConfig) -> None:
    from .orthobuilder import build_sign_function
    p = cfg.params
    fns = load_funcs(p["funcs"])
    eta = _load_measure(p["measure"])
    t0 = time.perf_counter()
    try:
        h = build_sign_function(fns, eta, tol=p["tol"], max_level=p["max_level"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    _finite("ortho build", h.residual)
    _emit_json(cfg, h.to_dict(), [], t0)


# -- parser ------------------------------------------------------------------------

def _dist_options(sp):
    sp.add_argument("--dist", required=True, help="rademacher | uniform_symmetric | two_point | fixed")
    sp.add_argument("--c", type=float, default=1.0, help="disorder strength")
    sp.add_argument("--a", type=float, default=0.0, help="two_point first value")
    sp.add_argument("--b", type=float, default=0.0, help="two_point second value")
    sp.add_argument("--p", type=float, default=0.5, help="two_point probability of a")
    sp.add_argument("--values", type=float, nargs="+", help="fixed couplings, cycled")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tau-floor", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rankone", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    groups = ap.add_subparsers(dest="group", required=True)
    group_names: dict[int, str] = {}

    def new_group(name, help_):
        g = groups.add_parser(name, help=help_).add_subparsers(dest="cmd", required=True)
        group_names[id(g)] = name
        return g

    def command(group, name, func, help_):
        label = group_names[id(group)]
        sp = group.add_parser(name, help=help_)
        sp.set_defaults(func=func, command=f"{label} {name}")
        sp.add_argument("--config", help="JSON file with option values (unknown keys rejected)")
        return sp

    g = new_group("cascade", "tau cascade")
    sp = command(g, "run", cmd_cascade_run, "run trajectories and write CSV")
    _dist_options(sp)
    sp.add_argument("--steps", type=int, default=500)
    sp.add_argument("--trajectories", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    sp = command(g, "localize", cmd_cascade_localize, "steps until tau drops below a target")
    _dist_options(sp)
    sp.add_argument("--target", type=float, default=1e-3)
    sp.add_argument("--max-steps", type=int, default=1_000_000)
    sp.add_argument("--curve-stride", type=int, default=0, help="0 picks about 1000 curve points")
    sp.add_argument("--out")
    sp.add_argument("--svg")

    g = new_group("adtheory", "Aronszajn-Donoghue engine")
    sp = command(g, "perturb", cmd_adtheory_perturb, "spectral measure after coupling alpha")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--out")

    g = new_group("transforms", "Borel transform")
    sp = command(g, "eval", cmd_transforms_eval, "F(z) off the support")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--z", required=True, help='complex point such as "0.5+1e-6i"')
    sp.add_argument("--out")
    sp = command(g, "boundary", cmd_transforms_boundary, "F(x + i0) inside the support")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--out")

    g = new_group("bounds", "a.c. loss bounds")
    sp = command(g, "verify", cmd_bounds_verify, "check the bounds on a scenario")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--lambda", dest="lambda_", type=float, required=True)
    sp.add_argument("--out")
    sp = command(g, "dlower", cmd_bounds_dlower, "closed-form lower bound on d")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.add_argument("--out")
    sp = command(g, "scenario", cmd_bounds_scenario, "write a random scenario")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    g = new_group("ortho", "sign-function construction")
    sp = command(g, "build", cmd_ortho_build, "build h orthogonal to a function family")
    sp.add_argument("--funcs", required=True)
    sp.add_argument("--measure", required=True)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-level", type=int, default=24)
    sp.add_argument("--out")
    return ap


_META = {"func", "command", "group", "cmd", "config", "out", "svg"}


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(args).items() if k not in _META}
    if args.config:
        loaded = _load_json(args.config, "config")
        if not isinstance(loaded, dict):
            raise InvalidInput("config must be a JSON object")
        known = set(params) | {"out", "svg"}
        unknown = set(loaded) - known
        if unknown:
            raise InvalidInput(f"unknown config keys {sorted(unknown)}; allowed: {sorted(known)}")
        for k, v in loaded.items():
            if k in ("out", "svg"):
                setattr(args, k, v)
            else:
                params[k] = v
    return ExperimentConfig(args.command, params, getattr(args, "out", None), getattr(args, "svg", None))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        args.func(cfg)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, RankOneError) as exc:
        print(f"numerical error in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FloatingPointError as exc:
        print(f"numerical error in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

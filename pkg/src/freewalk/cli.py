"""Command line front end.

Exit codes: 0 success, 2 numerical failure, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import mpmath as mp
import numpy as np

from . import __version__
from .config import ConfigError, digest, load_config
from .core import FreeProductError, GeneratorSet, make_cyclic_free_product
from .equations import DEFAULT_OPTIONS, InvalidMeasure, solve_stationary_traffic
from .families import (
    eval_F,
    eval_G,
    simple_walk,
    working_digits,
    xk_mp,
    yk_mp,
    z2zk_profile,
    zkzk_profile,
)
from .observables import analyze, maximize, parse_grid, sweep
from .presets import FAMILIES, GROUP_DEFAULTS, get_family
from .simulate import SimConfig, drift_from, first_letter_from, run_walks

EXIT_NUMERIC = 2
EXIT_CONFIG = 3
SEED_ENV = "FREEWALK_SEED"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def rounded(v):
    """JSON value with the same 12 significant digits as the CSV."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    if isinstance(v, np.ndarray):
        return [rounded(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [rounded(x) for x in v]
    if isinstance(v, dict):
        return {k: rounded(x) for k, x in v.items()}
    return v


def manifest(command: str, args: dict, tolerance=None, seed=None, config_digest=None) -> dict:
    return {
        "tool": "freewalk",
        "version": __version__,
        "command": command,
        "arguments": args,
        "config_digest": config_digest or digest(args),
        "tolerance": tolerance,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def csv_text(man: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    for key, value in man.items():
        if key != "timestamp":
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    buf.write(f"# timestamp: {man['timestamp']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def json_text(man: dict, payload) -> str:
    return json.dumps({"manifest": man, **rounded(payload)}, indent=2, sort_keys=False) + "\n"


def write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _finite(values):
    for v in values:
        if isinstance(v, float) and not math.isfinite(v):
            raise ArithmeticError(f"non-finite value {v} in output")


def _point(text: str | None) -> tuple[float, ...]:
    if text is None:
        return ()
    return tuple(float(v) for v in text.split(","))


def _group(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError("group", f"expected comma separated orders, got {text!r}") from None


def _family_from_args(args):
    if args.family:
        try:
            return get_family(args.family)
        except KeyError as err:
            raise ConfigError("family", err.args[0]) from None
    if getattr(args, "group", None):
        orders = _group(args.group)
        if orders not in GROUP_DEFAULTS:
            raise ConfigError("group", f"no default family for {orders}; pass --family")
        return get_family(GROUP_DEFAULTS[orders])
    raise ConfigError("family", "pass --family or --group")


def _measure_from_args(args):
    """(mu, S, opts, digest) from --config, --family/--at or --group --simple."""
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        return cfg.mu, cfg.S, cfg.opts, cfg.digest
    if getattr(args, "simple", False):
        if not args.group:
            raise ConfigError("group", "--simple needs --group")
        try:
            fp = make_cyclic_free_product(_group(args.group))
        except FreeProductError as err:
            raise ConfigError("group", str(err)) from None
        return simple_walk(fp), GeneratorSet.minimal_symmetric(fp), DEFAULT_OPTIONS, None
    family = _family_from_args(args)
    point = _point(args.at)
    if not family.feasible(point):
        raise ConfigError("at", f"point {point} is outside family {family.name} with parameters {family.params}")
    try:
        mu, S = family.build(point)
    except InvalidMeasure as err:
        raise ConfigError("at", str(err)) from None
    return mu, S, DEFAULT_OPTIONS, None


# -- subcommands -----------------------------------------------------------------


def cmd_analyze(args) -> int:
    mu, S, opts, cdig = _measure_from_args(args)
    fp = mu.fp
    a = analyze(mu, S, opts, first_passage=True)
    stat = solve_stationary_traffic(mu, opts)
    names = [str(x) for x in fp.sigma]
    payload = {
        "group": list(fp.orders),
        "sigma": names,
        "mu": mu.weights,
        "r": a.r,
        "q": a.q,
        "gamma_sigma": a.gamma_sigma,
        "gamma_s": a.gamma_s,
        "entropy": a.entropy,
        "v_sigma": a.v_sigma,
        "v_s": a.v_s,
        "ratio": a.ratio,
        "stationary": a.stationary,
        "stationary_solution": None if not stat else stat.r,
        "residual": a.residual,
    }
    _finite([a.gamma_sigma, a.gamma_s, a.entropy, a.v_sigma, a.v_s, a.ratio])
    man = manifest("analyze", vars_for_manifest(args), opts.tolerance, None, cdig)
    if args.json:
        write(json_text(man, payload), args.json)
    if args.json != "-":
        lines = [f"{'letter':>8} {'mu':>14} {'r':>14} {'q':>14}"]
        for n, name in enumerate(names):
            lines.append(f"{name:>8} {fmt(mu.weights[n]):>14} {fmt(a.r[n]):>14} {fmt(a.q[n]):>14}")
        for key in ("gamma_sigma", "gamma_s", "entropy", "v_sigma", "v_s", "ratio", "stationary"):
            lines.append(f"{key:>12} = {fmt(payload[key])}")
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_sweep(args) -> int:
    family = _family_from_args(args)
    if len(args.grid) != len(family.params):
        raise ConfigError("grid", f"family {family.name} needs one --grid per parameter {family.params}")
    try:
        grids = [parse_grid(g, family.integer) for g in args.grid]
    except ValueError as err:
        raise ConfigError("grid", str(err)) from None
    res = sweep(family, grids)
    header = list(family.params) + list(res.columns)
    rows = [list(row.point) + [getattr(row.analysis, c) for c in res.columns] for row in res.rows]
    for row in rows:
        _finite(row)
    meta = {"failures": [[list(p), msg] for p, msg in res.failures]}
    man = manifest("sweep", vars_for_manifest(args), DEFAULT_OPTIONS.tolerance)
    man["failures"] = meta["failures"]
    write(csv_text(man, header, rows), args.output)
    if args.json:
        write(json_text(man, {"columns": header, "rows": [dict(zip(header, r)) for r in rows]}), args.json)
    return 0


def cmd_maximize(args) -> int:
    family = _family_from_args(args)
    res = maximize(family, args.objective, grid=args.grid_points, starts=args.starts)
    payload = {"family": family.name, "objective": args.objective,
               "point": dict(zip(family.params, res.point)), "value": res.value,
               "evaluations": res.evaluations}
    if family.name == "z2z3":
        payload["mu_a"] = 1 - sum(res.point)
    write(json_text(manifest("maximize", vars_for_manifest(args), DEFAULT_OPTIONS.tolerance), payload), args.output)
    return 0


def _k_range(text: str) -> list[int]:
    for sep in ("..", ":", "-"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            ks = list(range(int(lo), int(hi) + 1))
            break
    else:
        ks = [int(text)]
    if not ks or min(ks) < 3:
        raise ConfigError("k", "k must be at least 3")
    return ks


def cmd_family_table(args) -> int:
    ks = _k_range(args.k)
    profile = zkzk_profile if args.kind == "zkzk" else z2zk_profile
    root = "x_k" if args.kind == "zkzk" else "y_k"
    rows = []
    for k in ks:
        p = profile(k)
        rows.append([k, p.root, p.drift, " ".join(fmt(v) for v in p.r)])
    man = manifest("family-table", vars_for_manifest(args))
    write(csv_text(man, ["k", root, "gamma", "r"], rows), args.output)
    return 0


def cmd_roots(args) -> int:
    ks = _k_range(args.k)
    rows = []
    for k in ks:
        if args.kind == "F":
            x, dps = xk_mp(k), working_digits(k, 3)
            with mp.workdps(dps):
                res = float(abs(eval_F(k, x) - 1))
        else:
            x, dps = yk_mp(k), working_digits(k, 2)
            with mp.workdps(dps):
                res = float(abs(eval_G(k - 1, x) - x))
        rows.append([k, float(x), res, dps])
    man = manifest("roots", vars_for_manifest(args))
    write(csv_text(man, ["k", "root", "residual", "digits"], rows), args.output)
    return 0


def cmd_simulate(args) -> int:
    mu, S, _, cdig = _measure_from_args(args)
    fp = mu.fp
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0"))
    try:
        cfg = SimConfig(args.steps, args.trials, seed)
    except ValueError as err:
        raise ConfigError("steps", str(err)) from None
    target = None
    if args.target:
        try:
            target = fp.parse_letter(args.target)
        except FreeProductError as err:
            raise ConfigError("target", str(err)) from None
    rec = run_walks(mu, cfg, S, target)
    drift = drift_from(rec, cfg.steps, args.metric)
    fl = first_letter_from(rec, len(fp.sigma))
    payload = {
        "metric": args.metric,
        "drift": {"value": drift.value, "stderr": drift.stderr, "trials": drift.trials},
        "first_letter": {str(x): [fl.freq[n], fl.stderr[n]] for n, x in enumerate(fp.sigma)},
        "empty_fraction": fl.empty_fraction,
        "unstable_fraction": fl.unstable_fraction,
    }
    if rec.hit is not None:
        p = float(rec.hit.mean())
        payload["hit"] = {"target": args.target, "value": p, "stderr": math.sqrt(p * (1 - p) / cfg.trials)}
    man = manifest("simulate", vars_for_manifest(args), None, seed, cdig)
    write(json_text(man, payload), args.output)
    return 0


def vars_for_manifest(args) -> dict:
    skip = {"func", "output", "json"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freewalk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"freewalk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def measure_args(p):
        p.add_argument("config", nargs="?", help="JSON group + measure configuration")
        p.add_argument("--family", choices=sorted(FAMILIES))
        p.add_argument("--group", help="comma separated factor orders, e.g. 4,4")
        p.add_argument("--at", help="parameter point for --family, e.g. 0.25 or 0.1,0.2")
        p.add_argument("--simple", action="store_true", help="simple walk on --group with minimal S")

    p = sub.add_parser("analyze", help="all observables for one walk")
    measure_args(p)
    p.add_argument("--json", help="write the JSON report here ('-' for stdout only)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="tabulate observables over a family")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--group")
    p.add_argument("--param", action="append", help="parameter name (informational; order follows the family)")
    p.add_argument("--grid", action="append", required=True, help="start:stop:count or comma list, once per parameter")
    p.add_argument("-o", "--output")
    p.add_argument("--json", help="JSON mirror of the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("maximize", help="maximise drift or ratio over a family")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--group")
    p.add_argument("--objective", choices=["drift", "ratio"], default="drift")
    p.add_argument("--grid-points", type=int, default=41)
    p.add_argument("--starts", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_maximize)

    p = sub.add_parser("family-table", help="simple-walk drift tables")
    p.add_argument("kind", choices=["zkzk", "z2zk"])
    p.add_argument("k", help="range like 3..8")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_family_table)

    p = sub.add_parser("roots", help="distinguished roots x_k of F_k = 1 or y_k of G_{k-1}(y) = y")
    p.add_argument("kind", choices=["F", "G"])
    p.add_argument("k", help="range like 3..20")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("simulate", help="Monte Carlo estimates")
    measure_args(p)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, help=f"default from ${SEED_ENV}, else 0")
    p.add_argument("--metric", choices=["sigma", "s"], default="sigma")
    p.add_argument("--target", help="letter f:e whose hitting probability is estimated")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidMeasure, FreeProductError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

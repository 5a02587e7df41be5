"""Command-line interface: ``cmcvrp solve|decompose|validate|report``.

Exit status is 0 on success, 1 when the outcome is infeasible or a
solution violates constraints, and 2 for usage, parse and I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .annealer import AnnealParams
from .decomposer import decompose, leaf_statistics, tree_to_json
from .exceptions import CmcVrpError, CvrpParseError, DomainError, SolutionParseError
from .instance import bks_registry, bundled_instances, load_bundled, read_instance
from .pipeline import NAIVE, Budget, curves_to_csv, run_trials
from .report import convergence_svg, load_records, summary_csv, summary_table
from .routing import (
    INTEGRATED,
    Solution,
    parse_solution,
    read_solution,
    validate,
    write_solution,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("cmcvrp")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

# every option with its default; config files may set any of these keys
DEFAULTS = {
    "method": "abd",
    "trials": 10,
    "max_vars": 100,
    "budget_secs": 60.0,
    "budget_iters": None,
    "jobs": 1,
    "seed": 0,
    "distance": "rounded",
    "bks": None,
    "out": "runs",
    "mu_step": None,
    "balance_tol": None,
    "strict_k": "on",
    "mu_search": "linear",
    "restarts": 100,
    "sweeps": 1000,
}


class UsageError(Exception):
    pass


def _add_common(p, *, solve=True):
    p.add_argument("instance", help="CVRPLIB .vrp file, or the name of a bundled instance")
    methods = ["naive", "dbd", "abd"] if solve else ["dbd", "abd"]
    p.add_argument("--method", type=str.lower, choices=methods, help="decomposition method (default: abd)")
    p.add_argument("--max-vars", dest="max_vars", type=int, help="largest subproblem size (default: 100)")
    p.add_argument("--seed", type=int, help="master seed; trial t uses seed + t (default: 0)")
    p.add_argument("--distance", choices=["rounded", "exact"], help="routing distance convention (default: rounded)")
    p.add_argument("--out", help="output directory (default: runs)")
    p.add_argument("--mu-step", dest="mu_step", type=float, help="penalty increment (default: 1 for DBD, 0.001 for ABD)")
    p.add_argument("--balance-tol", dest="balance_tol", type=float, help="accepted demand imbalance (default: largest demand in the set)")
    p.add_argument("--mu-search", dest="mu_search", choices=["linear", "bisect"], help="penalty search strategy (default: linear)")
    p.add_argument("--restarts", type=int, help="annealing restarts per penalty value (default: 100)")
    p.add_argument("--sweeps", type=int, help="annealing sweeps per restart (default: 1000)")
    p.add_argument("--config", help="TOML file with defaults for any option; flags win")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cmcvrp",
        description="Recursive constrained max-cut decomposition for CVRP.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run trials and write records, solutions and summaries")
    _add_common(p)
    p.add_argument("--trials", type=int, help="number of trials (default: 10)")
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--budget-secs", dest="budget_secs", type=float, help="seconds per subproblem (default: 60)")
    budget.add_argument("--budget-iters", dest="budget_iters", type=int, help="improvement rounds per subproblem instead of seconds")
    p.add_argument("--jobs", type=int, help="parallel subproblem solves (default: 1)")
    p.add_argument("--bks", help="extra best-known-solution registry (name objective per line)")
    p.add_argument("--strict-k", dest="strict_k", choices=["on", "off"], help="route count must not exceed the master fleet (default: on)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decompose", help="partition only; write the split tree and leaf statistics")
    _add_common(p, solve=False)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("solution", help="solution file with 'Route #k:' lines")
    p.add_argument("instance", help="CVRPLIB .vrp file, or the name of a bundled instance")
    p.add_argument("--k-limit", dest="k_limit", type=int, help="largest allowed route count (default: instance fleet size)")
    p.add_argument("--exact-k", dest="exact_k", action="store_true", help="require exactly k-limit routes")
    p.add_argument("--distance", choices=["rounded", "exact"], default="rounded", help="distance convention for the cost (default: rounded)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="summarise a directory of run records")
    p.add_argument("run_dir", help="directory searched recursively for run record JSON files")
    p.add_argument("--out", help="where to write tables and plots (default: run_dir)")
    p.set_defaults(func=cmd_report)
    return parser


def _settings(args):
    """Merge defaults, the optional TOML file and explicit flags (in that order)."""
    merged = dict(DEFAULTS)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path, "rb") as fh:
                cfg = tomllib.load(fh)
        except OSError as err:
            raise UsageError(f"cannot read config {cfg_path}: {err.strerror}") from None
        except tomllib.TOMLDecodeError as err:
            raise UsageError(f"invalid config {cfg_path}: {err}") from None
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r} in {cfg_path}")
            merged[key] = value
        keys = {k.replace("-", "_") for k in cfg}
        if "budget_iters" in keys and "budget_secs" not in keys:
            merged["budget_secs"] = None
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "budget_iters", None) is not None:
        merged["budget_secs"] = None
    elif getattr(args, "budget_secs", None) is not None:
        merged["budget_iters"] = None
    if str(merged["method"]).lower() not in ("naive", "dbd", "abd"):
        raise UsageError(f"unknown method {merged['method']!r}")
    merged["method"] = str(merged["method"]).lower()
    if str(merged["strict_k"]).lower() in ("true", "1"):
        merged["strict_k"] = "on"
    elif str(merged["strict_k"]).lower() in ("false", "0"):
        merged["strict_k"] = "off"
    for key in ("trials", "jobs", "max_vars", "restarts", "sweeps"):
        if int(merged[key]) < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be at least 1")
    return merged


def _budget(s):
    if s["budget_iters"] is not None:
        if int(s["budget_iters"]) < 0:
            raise UsageError("--budget-iters must be non-negative")
        return Budget(iterations=int(s["budget_iters"]))
    if s["budget_secs"] is None or float(s["budget_secs"]) <= 0:
        raise UsageError("--budget-secs must be positive")
    return Budget(seconds=float(s["budget_secs"]))


def _load_instance(spec, distance):
    path = Path(spec)
    if path.is_file():
        try:
            return read_instance(path, distance_mode=distance)
        except OSError as err:
            raise UsageError(f"cannot read {path}: {err.strerror}") from None
    if spec in bundled_instances():
        return load_bundled(spec, distance_mode=distance)
    raise UsageError(f"cannot read {spec}: no such file or bundled instance")


def _params(s):
    return AnnealParams(sweeps=int(s["sweeps"]), restarts=int(s["restarts"]))


def cmd_solve(args):
    s = _settings(args)
    inst = _load_instance(args.instance, s["distance"])
    budget = _budget(s)
    try:
        registry = bks_registry(s["bks"])
    except OSError as err:
        raise UsageError(f"cannot read {s['bks']}: {err.strerror}") from None
    bks = registry[inst.name].bks_objective if inst.name in registry else None
    if bks is None:
        log.warning("no best-known value for %s; gaps will be left empty", inst.name)
    method = s["method"]
    kwargs = {"bks": bks}
    if method != NAIVE:
        kwargs.update(
            jobs=int(s["jobs"]),
            max_variables=int(s["max_vars"]),
            params=_params(s),
            balance_tol=s["balance_tol"],
            mu_step=s["mu_step"],
            mu_search=s["mu_search"],
            strict_k=s["strict_k"] == "on",
        )
    records = run_trials(inst, method, budget, int(s["trials"]), int(s["seed"]), **kwargs)

    label = NAIVE if method == NAIVE else method.upper()
    out = Path(s["out"]) / f"{inst.name}_{label}"
    out.mkdir(parents=True, exist_ok=True)
    for r in records:
        (out / f"trial_{r.trial:02d}.json").write_text(r.to_json())
        if r.routes:
            sol = Solution.from_sequences(r.routes, inst, source=INTEGRATED)
            (out / f"trial_{r.trial:02d}.sol").write_text(write_solution(sol))
    (out / "convergence.csv").write_text(curves_to_csv(records))
    table = summary_table(records)
    (out / "summary.txt").write_text(table)
    (out / "summary.csv").write_text(summary_csv(records))
    print(table, end="")
    print(f"records written to {out}")
    return EXIT_OK if any(r.fs_flag for r in records) else EXIT_DOMAIN


def cmd_decompose(args):
    s = _settings(args)
    if s["method"] == NAIVE:
        raise UsageError("decompose needs --method dbd or abd")
    inst = _load_instance(args.instance, s["distance"])
    root = decompose(
        inst,
        s["method"],
        int(s["max_vars"]),
        int(s["seed"]),
        params=_params(s),
        balance_tol=s["balance_tol"],
        mu_step=s["mu_step"],
        mu_search=s["mu_search"],
    )
    stats = leaf_statistics(root, inst)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{inst.name}_{s['method'].upper()}_seed{s['seed']}.partition.json"
    path.write_text(tree_to_json(root))
    print(f"instance        {inst.name}")
    print(f"method          {s['method'].upper()}")
    print(f"leaves          {len(stats['leaf_sizes'])}")
    print(f"leaf sizes      {' '.join(map(str, stats['leaf_sizes']))}")
    print(f"leaf vehicles   {' '.join(map(str, stats['leaf_vehicles']))}")
    print(f"N_variables     {stats['n_variables_master']:,} -> {stats['n_variables_decomposed']:,}")
    print(f"VR rate         {stats['vr_rate']:.2f}%")
    print(f"SA time         {stats['sa_time']:.2f}s")
    print(f"partition       {path}")
    return EXIT_OK


def cmd_validate(args):
    inst = _load_instance(args.instance, args.distance)
    path = Path(args.solution)
    try:
        text = path.read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    sol = read_solution(text, inst)
    _, stated = parse_solution(text)
    k_limit = inst.vehicles if args.k_limit is None else args.k_limit
    report = validate(sol, inst.customers, k_limit, inst, exact_k=args.exact_k)
    for line in report.lines():
        print(line)
    print(f"routes {len(sol.routes)}  cost {sol.objective:g}")
    if stated is not None and abs(stated - sol.objective) > 1e-6 * max(1.0, abs(stated)):
        print(f"note: file states cost {stated:g}, recomputed {sol.objective:g}")
    return EXIT_OK if report.all_clear else EXIT_DOMAIN


def cmd_report(args):
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise UsageError(f"cannot read {run_dir}: not a directory")
    records = load_records(run_dir)
    if not records:
        print("no runs found", file=sys.stderr)
        return EXIT_DOMAIN
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    table = summary_table(records)
    (out / "summary.txt").write_text(table)
    (out / "summary.csv").write_text(summary_csv(records))
    by_instance = {}
    for r in records:
        by_instance.setdefault(r.instance_name, []).append(r)
    for name, recs in sorted(by_instance.items()):
        for method in sorted({r.method for r in recs}):
            chosen = sorted((r for r in recs if r.method == method), key=lambda r: r.trial)
            (out / f"convergence_{name}_{method}.csv").write_text(curves_to_csv(chosen))
        (out / f"convergence_{name}.svg").write_text(convergence_svg(recs, title=name))
    print(table, end="")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CvrpParseError, SolutionParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, CmcVrpError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Naive and decomposed runs, solution integration, metrics and convergence curves."""

from __future__ import annotations

import csv
import io
import json
import math
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .annealer import AnnealParams
from .decomposer import (
    DEFAULT_MAX_VARIABLES,
    decompose,
    make_subproblems,
    master_subproblem,
    subset_seed,
)
from .exceptions import DomainError, IntegrationError
from .instance import EXACT
from .metrics import count_variables, fs_rate, gap, vr_rate
from .qubo import normalize_method
from .routing import INTEGRATED, Budget, Solution, solve_heuristic, validate

NAIVE = "naive"

__all__ = [
    "NAIVE",
    "Budget",
    "ConvergencePoint",
    "EventSink",
    "RunRecord",
    "convergence_curve",
    "count_variables",
    "curves_to_csv",
    "fs_rate",
    "gap",
    "integrate",
    "run_decomposed",
    "run_naive",
    "run_trials",
    "summarize",
    "vr_rate",
]


@dataclass(frozen=True)
class ConvergencePoint:
    wall_time: float
    objective: float
    gap_pct: float | None = None


@dataclass
class RunRecord:
    """Outcome of one trial; serialises to one JSON document."""

    instance_name: str
    method: str
    trial: int
    seed: int
    sa_time: float
    subproblem_count: int
    n_variables_master: int
    n_variables_decomposed: int
    vr_rate: float
    fs_flag: bool
    objective: float | None = None
    gap_pct: float | None = None
    incumbents: list = field(default_factory=list)
    bks: int | None = None
    vehicles: int | None = None
    routes: list = field(default_factory=list)
    leaf_sizes: list = field(default_factory=list)
    leaf_vehicles: list = field(default_factory=list)
    subproblem_status: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    budget: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self):
        d = asdict(self)
        d["incumbents"] = [list(p) for p in self.incumbents]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["incumbents"] = [tuple(p) for p in d.get("incumbents", [])]
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def curve(self):
        return [
            ConvergencePoint(t, obj, None if not self.bks else gap(obj, self.bks))
            for t, obj in self.incumbents
        ]


class EventSink:
    """Serialises incumbent events from concurrent subproblem solves."""

    def __init__(self, n_streams):
        self._lock = threading.Lock()
        self._streams = [[] for _ in range(n_streams)]
        self.log = []

    def emit(self, stream, objective, wall_time):
        with self._lock:
            self._streams[stream].append((float(wall_time), float(objective)))
            self.log.append((stream, float(wall_time), float(objective)))

    def callback(self, stream):
        return lambda objective, wall_time: self.emit(stream, objective, wall_time)

    def streams(self):
        with self._lock:
            return [list(s) for s in self._streams]


def convergence_curve(streams, bks=None):
    """Combined objective over time for subproblems solved side by side.

    ``streams`` holds one list of ``(wall_time, objective)`` incumbent events
    per subproblem. The curve starts once every subproblem has a feasible
    solution, at the latest first-incumbent time, with the sum of the
    current bests; every later event adds a point with the updated sum.
    Returns ``None`` when some stream is empty.
    """
    streams = [sorted(s, key=lambda e: e[0]) for s in streams]
    if not streams or any(not s for s in streams):
        return None
    start = max(s[0][0] for s in streams)
    current = []
    for s in streams:
        # events are improvements, so the latest one up to ``start`` is the best
        current.append([obj for t, obj in s if t <= start][-1])
    total = sum(current)
    curve = [ConvergencePoint(start, total, None if bks is None else gap(total, bks))]
    later = sorted(
        (t, idx, order, obj)
        for idx, s in enumerate(streams)
        for order, (t, obj) in enumerate(s)
        if t > start
    )
    for t, idx, _, obj in later:
        if obj >= current[idx]:
            continue
        current[idx] = obj
        total = sum(current)
        curve.append(ConvergencePoint(t, total, None if bks is None else gap(total, bks)))
    return curve


def integrate(pairs):
    """Union of the sub-solutions' routes; refuses locally infeasible parts."""
    pairs = list(pairs)
    if not pairs:
        raise IntegrationError("nothing to integrate")
    routes, objective = [], 0.0
    for sub, sol in pairs:
        if not sol.feasible_local:
            raise IntegrationError(
                f"subproblem with {len(sub.subset)} customers has no feasible solution "
                f"({sol.status})"
            )
        routes.extend(sol.routes)
        objective += sol.objective
    return Solution(routes, objective, True, INTEGRATED)


def _solve_task(sub, budget, seed):
    events = []
    sol = solve_heuristic(sub, budget, seed, lambda obj, t: events.append((obj, t)))
    return sol, events


def _solve_all(subs, budget, seeds, jobs, sink):
    if jobs == 1 or len(subs) == 1:
        return [
            solve_heuristic(sub, budget, s, sink.callback(i))
            for i, (sub, s) in enumerate(zip(subs, seeds))
        ]
    with ProcessPoolExecutor(max_workers=min(jobs, len(subs))) as pool:
        futures = [pool.submit(_solve_task, sub, budget, s) for sub, s in zip(subs, seeds)]
        out = []
        for i, fut in enumerate(futures):
            sol, events = fut.result()
            for obj, t in events:
                sink.emit(i, obj, t)
            out.append(sol)
    return out


def _finish(record, inst, subs, sols, sink, k_limit, exact_k):
    record.subproblem_status = [s.status for s in sols]
    try:
        merged = integrate(zip(subs, sols))
    except IntegrationError as err:
        record.fs_flag = False
        record.violations = [str(err)]
        return record
    report = validate(merged, inst.customers, k_limit, inst, exact_k=exact_k)
    record.fs_flag = report.all_clear
    record.objective = merged.objective
    record.routes = merged.sequences()
    record.violations = [] if report.all_clear else report.lines()
    if record.fs_flag and record.bks:
        record.gap_pct = gap(merged.objective, record.bks)
    curve = convergence_curve(sink.streams())
    record.incumbents = [] if curve is None else [(p.wall_time, p.objective) for p in curve]
    return record


def _check_budget(budget):
    if not isinstance(budget, Budget):
        raise DomainError("budget must be a routing Budget")


def run_naive(inst, budget, seed=0, *, bks=None, trial=0, exact_k=False):
    """Solve the master instance directly with the routing heuristic."""
    _check_budget(budget)
    t0 = time.monotonic()
    sub = master_subproblem(inst)
    sink = EventSink(1)
    sol = solve_heuristic(sub, budget, seed, sink.callback(0))
    n_master = count_variables(inst.n_vertices, inst.n_customers, inst.vehicles)
    record = RunRecord(
        instance_name=inst.name,
        method=NAIVE,
        trial=trial,
        seed=seed,
        sa_time=0.0,
        subproblem_count=1,
        n_variables_master=n_master,
        n_variables_decomposed=n_master,
        vr_rate=0.0,
        fs_flag=False,
        bks=bks,
        vehicles=inst.vehicles,
        leaf_sizes=[inst.n_customers],
        leaf_vehicles=[inst.vehicles],
        budget=budget.to_dict(),
    )
    _finish(record, inst, [sub], [sol], sink, inst.vehicles, exact_k)
    record.wall_time = time.monotonic() - t0
    return record


def run_decomposed(
    inst,
    method,
    budget,
    jobs=1,
    seed=0,
    *,
    max_variables=DEFAULT_MAX_VARIABLES,
    bks=None,
    trial=0,
    params=None,
    balance_tol=None,
    mu_step=None,
    mu_search="linear",
    strict_k=True,
    exact_k=False,
    decomposition_distance=EXACT,
):
    """Decompose, solve every leaf under ``budget`` and validate the union.

    With ``strict_k`` (the default) the integrated solution may use at most
    the master fleet size; otherwise up to the sum of the subproblem fleets
    is tolerated, which is only useful for diagnostics.
    """
    method = normalize_method(method)
    _check_budget(budget)
    if jobs < 1:
        raise DomainError("jobs must be at least 1")
    t0 = time.monotonic()
    params = AnnealParams() if params is None else params
    root = decompose(
        inst,
        method,
        max_variables,
        seed,
        params=params,
        balance_tol=balance_tol,
        mu_step=mu_step,
        mu_search=mu_search,
        distance_mode=decomposition_distance,
    )
    if root.is_leaf:
        # nothing was split: solve the master problem with its own fleet
        subs = [master_subproblem(inst)]
    else:
        subs = make_subproblems(root, inst)
    n_master = count_variables(inst.n_vertices, inst.n_customers, inst.vehicles)
    n_dec = sum(s.n_variables for s in subs)
    record = RunRecord(
        instance_name=inst.name,
        method=method,
        trial=trial,
        seed=seed,
        sa_time=root.total_sa_time(),
        subproblem_count=len(subs),
        n_variables_master=n_master,
        n_variables_decomposed=n_dec,
        vr_rate=vr_rate(n_master, n_dec),
        fs_flag=False,
        bks=bks,
        vehicles=inst.vehicles,
        leaf_sizes=[len(s.subset) for s in subs],
        leaf_vehicles=[s.vehicles for s in subs],
        budget=budget.to_dict(),
    )
    sink = EventSink(len(subs))
    seeds = [subset_seed(seed, s.subset) for s in subs]
    sols = _solve_all(subs, budget, seeds, jobs, sink)
    k_limit = inst.vehicles if strict_k else sum(s.vehicles for s in subs)
    _finish(record, inst, subs, sols, sink, k_limit, exact_k)
    record.wall_time = time.monotonic() - t0
    return record


def run_trials(inst, method, budget, trials=10, seed=0, **kwargs):
    """``trials`` independent runs with seeds ``seed + trial``."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    is_naive = str(method).lower() == NAIVE
    records = []
    for t in range(trials):
        if is_naive:
            naive_kw = {k: kwargs[k] for k in ("bks", "exact_k") if k in kwargs}
            records.append(run_naive(inst, budget, seed + t, trial=t, **naive_kw))
        else:
            records.append(run_decomposed(inst, method, budget, seed=seed + t, trial=t, **kwargs))
    return records


def summarize(records):
    """One summary row per (instance, method).

    Average and minimum gaps are taken over feasible trials only; they are
    ``None`` when no trial was feasible or no best-known value is known.
    """
    groups = {}
    for r in records:
        groups.setdefault((r.instance_name, r.method), []).append(r)
    rows = []
    for (name, method), recs in sorted(groups.items()):
        gaps = [r.gap_pct for r in recs if r.fs_flag and r.gap_pct is not None]
        rows.append(
            {
                "method": method,
                "instance": name,
                "trials": len(recs),
                "fs_rate": fs_rate(recs),
                "avg_gap": sum(gaps) / len(gaps) if gaps else None,
                "min_gap": min(gaps) if gaps else None,
                "sa_time": sum(r.sa_time for r in recs) / len(recs),
                "n_variables_master": recs[0].n_variables_master,
                "n_variables": round(sum(r.n_variables_decomposed for r in recs) / len(recs)),
                "vr_rate": sum(r.vr_rate for r in recs) / len(recs),
            }
        )
    return rows


def curves_to_csv(records):
    """CSV with columns trial, wall_ms, objective, gap_pct."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "wall_ms", "objective", "gap_pct"])
    for r in records:
        for p in r.curve():
            w.writerow(
                [
                    r.trial,
                    round(p.wall_time * 1000.0, 3),
                    int(p.objective) if float(p.objective).is_integer() else p.objective,
                    "" if p.gap_pct is None or math.isnan(p.gap_pct) else round(p.gap_pct, 4),
                ]
            )
    return buf.getvalue()

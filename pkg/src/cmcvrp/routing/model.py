"""Routes, solutions, feasibility checks and the CVRPLIB solution format."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from ..exceptions import DomainError, SolutionParseError

HEURISTIC = "heuristic"
EXACT_SOURCE = "exact"
INTEGRATED = "integrated"


@dataclass(frozen=True)
class Route:
    """Customer visiting sequence; the depot is implicit at both ends."""

    customers: tuple
    load: int

    @classmethod
    def of(cls, customers, inst):
        customers = tuple(int(c) for c in customers)
        if not customers:
            raise DomainError("a route needs at least one customer")
        return cls(customers, int(inst.demands[list(customers)].sum()))


@dataclass
class Solution:
    routes: list
    objective: float
    feasible_local: bool
    source: str = HEURISTIC
    status: str = "ok"

    @classmethod
    def from_sequences(cls, sequences, inst, *, source=HEURISTIC, feasible_local=True):
        routes = [Route.of(seq, inst) for seq in sequences if len(seq)]
        return cls(routes, solution_cost(routes, inst), feasible_local, source)

    @classmethod
    def infeasible(cls, source=HEURISTIC, status="infeasible"):
        return cls([], math.inf, False, source, status)

    def sequences(self):
        return [list(r.customers) for r in self.routes]


def route_cost(route, inst):
    """Depot -> customers in order -> depot, under the instance's distance mode."""
    seq = route.customers if isinstance(route, Route) else tuple(route)
    if not seq:
        raise DomainError("route is empty")
    d = inst.distance_matrix()
    total = d[0, seq[0]] + d[seq[-1], 0]
    for a, b in zip(seq, seq[1:]):
        total += d[a, b]
    return float(total)


def solution_cost(routes, inst):
    return float(sum(route_cost(r, inst) for r in routes))


@dataclass
class FeasibilityReport:
    visit_violations: int = 0
    missing_customers: list = field(default_factory=list)
    foreign_customers: list = field(default_factory=list)
    capacity_violations: int = 0
    overloaded_routes: list = field(default_factory=list)
    vehicle_count_excess: int = 0
    vehicle_count_shortfall: int = 0
    depot_in_route: int = 0
    subtour_free: bool = True

    @property
    def all_clear(self):
        return (
            self.visit_violations == 0
            and not self.missing_customers
            and not self.foreign_customers
            and self.capacity_violations == 0
            and self.vehicle_count_excess == 0
            and self.vehicle_count_shortfall == 0
            and self.depot_in_route == 0
            and self.subtour_free
        )

    def lines(self):
        if self.all_clear:
            return ["feasible: all constraints satisfied"]
        out = []
        if self.visit_violations:
            out.append(f"visit violations: {self.visit_violations} customer(s) visited more than once")
        if self.missing_customers:
            out.append(f"missing customers: {self.missing_customers}")
        if self.foreign_customers:
            out.append(f"foreign customers: {self.foreign_customers}")
        for idx, load in self.overloaded_routes:
            out.append(f"capacity violation: route #{idx + 1} load {load}")
        if self.vehicle_count_excess:
            out.append(f"vehicle count excess: {self.vehicle_count_excess}")
        if self.vehicle_count_shortfall:
            out.append(f"vehicle count shortfall: {self.vehicle_count_shortfall}")
        if self.depot_in_route:
            out.append(f"depot listed inside {self.depot_in_route} route(s)")
        return out


def validate(sol, customers, k_limit, inst, *, exact_k=False):
    """Check visits, capacity and fleet size; violations are reported, never raised.

    With ``exact_k`` the route count must equal ``k_limit`` instead of not
    exceeding it.
    """
    wanted = {int(c) for c in customers}
    seen = {}
    rep = FeasibilityReport()
    routes = sol.routes if isinstance(sol, Solution) else sol
    for idx, route in enumerate(routes):
        seq = route.customers if isinstance(route, Route) else tuple(route)
        if 0 in seq:
            rep.depot_in_route += 1
        load = 0
        for c in seq:
            if c == 0:
                continue
            seen[c] = seen.get(c, 0) + 1
            if 0 < c < inst.n_vertices:
                load += int(inst.demands[c])
        if load > inst.capacity:
            rep.capacity_violations += 1
            rep.overloaded_routes.append((idx, load))
    rep.visit_violations = sum(1 for c, k in seen.items() if k > 1)
    rep.missing_customers = sorted(wanted - seen.keys())
    rep.foreign_customers = sorted(seen.keys() - wanted)
    n_routes = sum(1 for r in routes if len(r.customers if isinstance(r, Route) else r))
    rep.vehicle_count_excess = max(0, n_routes - k_limit)
    if exact_k:
        rep.vehicle_count_shortfall = max(0, k_limit - n_routes)
    return rep


# -- CVRPLIB solution text ---------------------------------------------------

_ROUTE_RE = re.compile(r"^Route\s*#\s*(\d+)\s*:(.*)$", re.IGNORECASE)


def _fmt_cost(value):
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_solution(sol):
    lines = [
        f"Route #{k}: " + " ".join(str(c) for c in r.customers)
        for k, r in enumerate(sol.routes, start=1)
    ]
    lines.append(f"Cost {_fmt_cost(sol.objective)}")
    return "\n".join(lines) + "\n"


def parse_solution(text):
    """Return ``(routes, cost)``; ``cost`` is ``None`` when the file has none."""
    routes, cost = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _ROUTE_RE.match(line)
        if m:
            try:
                seq = [int(t) for t in m.group(2).split()]
            except ValueError:
                raise SolutionParseError(f"line {lineno}: non-integer customer id") from None
            routes.append(seq)
            continue
        parts = line.split()
        if parts[0].lower() == "cost" and len(parts) == 2:
            try:
                cost = float(parts[1])
            except ValueError:
                raise SolutionParseError(f"line {lineno}: non-numeric cost") from None
            continue
        raise SolutionParseError(f"line {lineno}: unrecognised line {line!r}")
    if not routes:
        raise SolutionParseError("no 'Route #k:' lines found")
    return routes, cost


def read_solution(text, inst):
    """Parse solution text against ``inst``; the objective is recomputed."""
    seqs, _ = parse_solution(text)
    for seq in seqs:
        for c in seq:
            if not 0 <= c < inst.n_vertices:
                raise SolutionParseError(f"customer id {c} outside instance range")
    routes = [
        Route(tuple(seq), int(inst.demands[[c for c in seq]].sum())) for seq in seqs if seq
    ]
    objective = float(sum(route_cost(r, inst) for r in routes))
    return Solution(routes, objective, True, INTEGRATED)

"""Anytime CVRP heuristic: savings construction, local search, ruin-and-recreate.

Construction merges routes by Clarke-Wright savings, then tries to empty
the lightest routes until at most ``K`` remain. If that fails, customers are
packed first-fit-decreasing into ``K`` bins and any overload is repaired.

Improvement alternates a first-improvement descent with ruin-and-recreate
perturbations accepted by a record-to-record rule. The descent scans its
neighbourhoods in a fixed order (intra-route 2-opt, relocate, swap, then
the inter-route tail exchange known as 2-opt*). Inside the descent, route
overload is allowed but charged ``penalty`` per unit of excess demand; the
penalty adapts to how often descents end infeasible, and only feasible
solutions can become incumbents.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError
from ._descent import descend_kernel
from .model import HEURISTIC, Solution

_EPS = 1e-9
_REPAIR_ROUNDS = 200
_ACCEPT_SLACK = 0.01
_PENALTY_ESCALATIONS = 6
# string removal: mean customers removed, longest string, insertion blink rate
_MEAN_REMOVED = 10
_MAX_STRING = 10
_BLINK = 0.01


@dataclass(frozen=True)
class Budget:
    """Stopping rule: a number of improvement rounds, a wall-clock limit, or both.

    ``iterations=0`` returns the constructed solution without improvement.
    When both limits are set the first one reached stops the search.
    """

    iterations: int | None = None
    seconds: float | None = None

    def __post_init__(self):
        if self.iterations is None and self.seconds is None:
            raise DomainError("budget needs iterations or seconds")
        if self.iterations is not None and self.iterations < 0:
            raise DomainError("iteration budget must be non-negative")
        if self.seconds is not None and self.seconds < 0:
            raise DomainError("time budget must be non-negative")

    def to_dict(self):
        return {"iterations": self.iterations, "seconds": self.seconds}


class _Clock:
    def __init__(self, budget):
        self.start = time.monotonic()
        self.deadline = None if budget.seconds is None else self.start + budget.seconds
        self.iterations = budget.iterations

    def elapsed(self):
        return time.monotonic() - self.start

    def expired(self):
        return self.deadline is not None and time.monotonic() >= self.deadline

    def done(self, it):
        return (self.iterations is not None and it >= self.iterations) or self.expired()

    def progress(self, it):
        p = 0.0
        if self.iterations:
            p = max(p, it / self.iterations)
        if self.deadline is not None and self.deadline > self.start:
            p = max(p, (time.monotonic() - self.start) / (self.deadline - self.start))
        return min(p, 1.0)


class _Search:
    """Routes over local ids 1..m (0 is the depot) in exactly ``k`` slots.

    Empty slots stand for unused vehicles.
    """

    def __init__(self, d, dem, cap, k, clock):
        self.d = d
        self.dem = dem
        self.cap = cap
        self.k = k
        self.m = len(dem) - 1
        self.clock = clock
        self.d_arr = np.ascontiguousarray(d, dtype=float)
        self.dem_arr = np.asarray(dem, dtype=np.int64)
        m = self.m
        mean_d = sum(d[0][1:]) / m if m else 1.0
        mean_q = sum(dem[1:]) / m if m else 1.0
        self.base_penalty = max(mean_d / max(mean_q, 1e-9), 1e-6)
        self.penalty = self.base_penalty

    # -- costs -------------------------------------------------------------

    def route_cost(self, r):
        if not r:
            return 0.0
        d = self.d
        c = d[0][r[0]] + d[r[-1]][0]
        for a, b in zip(r, r[1:]):
            c += d[a][b]
        return c

    def cost(self, routes):
        return sum(self.route_cost(r) for r in routes)

    def load(self, r):
        dem = self.dem
        return sum(dem[c] for c in r)

    def feasible(self, routes):
        return all(self.load(r) <= self.cap for r in routes)

    def excess(self, x):
        return x - self.cap if x > self.cap else 0

    # -- construction ------------------------------------------------------

    def savings(self):
        d, dem, cap, m = self.d, self.dem, self.cap, self.m
        routes = {i: [i] for i in range(1, m + 1)}
        loads = {i: dem[i] for i in range(1, m + 1)}
        owner = list(range(m + 1))
        pairs = [
            (d[0][i] + d[0][j] - d[i][j], i, j)
            for i in range(1, m + 1)
            for j in range(i + 1, m + 1)
        ]
        pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
        for _, i, j in pairs:
            ri, rj = owner[i], owner[j]
            if ri == rj or loads[ri] + loads[rj] > cap:
                continue
            a, b = routes[ri], routes[rj]
            if a[-1] == i and b[0] == j:
                merged = a + b
            elif a[0] == i and b[-1] == j:
                merged = b + a
            elif a[-1] == i and b[-1] == j:
                merged = a + b[::-1]
            elif a[0] == i and b[0] == j:
                merged = a[::-1] + b
            else:
                continue
            routes[ri] = merged
            loads[ri] += loads.pop(rj)
            del routes[rj]
            for c in b:
                owner[c] = ri
        return [routes[key] for key in sorted(routes)]

    def cheapest_insertion(self, routes, loads, c, *, strict=False):
        """Best ``(delta, route, position)`` for ``c`` under the current penalty.

        With ``strict`` only insertions that keep the route within capacity
        are considered and ``None`` is returned when there is none.
        """
        d, q = self.d, self.dem[c]
        dc = d[c]
        best = None
        opened = False
        for ri, r in enumerate(routes):
            extra = self.excess(loads[ri] + q) - self.excess(loads[ri])
            if strict and extra:
                continue
            pen = self.penalty * extra
            if not r:
                if opened:
                    continue
                opened = True
                delta = 2 * dc[0] + pen
                if best is None or delta < best[0] - _EPS:
                    best = (delta, ri, 0)
                continue
            prev = 0
            for pos in range(len(r) + 1):
                nxt = r[pos] if pos < len(r) else 0
                delta = d[prev][c] + dc[nxt] - d[prev][nxt] + pen
                if best is None or delta < best[0] - _EPS:
                    best = (delta, ri, pos)
                prev = nxt
        return best

    def reduce_routes(self, routes):
        """Empty the lightest routes into the others until at most k remain."""
        routes = [r[:] for r in routes]
        while len(routes) > self.k:
            loads = [self.load(r) for r in routes]
            order = sorted(range(len(routes)), key=lambda i: (loads[i], i))
            for victim in order:
                trial = [r[:] for idx, r in enumerate(routes) if idx != victim]
                tl = [loads[idx] for idx in range(len(routes)) if idx != victim]
                ok = True
                for c in sorted(routes[victim], key=lambda c: (-self.dem[c], c)):
                    ins = self.cheapest_insertion(trial, tl, c, strict=True)
                    if ins is None:
                        ok = False
                        break
                    _, ri, pos = ins
                    trial[ri].insert(pos, c)
                    tl[ri] += self.dem[c]
                if ok:
                    routes = trial
                    break
            else:
                return None
        return routes

    def pack(self, rng):
        """First-fit-decreasing into k bins, then overload repair.

        Returns the bins even when some overload is left.
        """
        dem, cap, k = self.dem, self.cap, self.k
        items = sorted(range(1, self.m + 1), key=lambda c: (-dem[c], c))
        bins = [[] for _ in range(k)]
        loads = [0] * k
        for c in items:
            for b in range(k):
                if loads[b] + dem[c] <= cap:
                    break
            else:
                b = min(range(k), key=lambda i: (loads[i], i))
            bins[b].append(c)
            loads[b] += dem[c]
        for _ in range(_REPAIR_ROUNDS):
            if self._repair(bins, loads) or self.clock.expired():
                break
            # shake: a few random moves between bins
            for _ in range(max(2, self.m // 10)):
                src = rng.randrange(k)
                if not bins[src]:
                    continue
                dst = rng.randrange(k)
                c = bins[src].pop(rng.randrange(len(bins[src])))
                bins[dst].append(c)
                loads[src] -= dem[c]
                loads[dst] += dem[c]
        return bins

    def _repair(self, bins, loads):
        """Descent on total overload; True once every bin fits."""
        dem, k, over = self.dem, self.k, self.excess

        def step():
            for a in range(k):
                if not over(loads[a]):
                    continue
                for ci, c in enumerate(bins[a]):
                    for b in range(k):
                        if b == a:
                            continue
                        before = over(loads[a]) + over(loads[b])
                        if over(loads[a] - dem[c]) + over(loads[b] + dem[c]) < before:
                            bins[a].pop(ci)
                            bins[b].append(c)
                            loads[a] -= dem[c]
                            loads[b] += dem[c]
                            return True
                        for vi, v in enumerate(bins[b]):
                            shift = dem[c] - dem[v]
                            if shift > 0 and over(loads[a] - shift) + over(loads[b] + shift) < before:
                                bins[a][ci], bins[b][vi] = v, c
                                loads[a] -= shift
                                loads[b] += shift
                                return True
            return False

        while any(over(x) for x in loads):
            if not step():
                return False
        return True

    def nearest_neighbor_order(self, group):
        d = self.d
        left = set(group)
        cur, seq = 0, []
        while left:
            cur = min(left, key=lambda c: (d[cur][c], c))
            seq.append(cur)
            left.remove(cur)
        return seq

    def construct(self, rng):
        """Initial routes in k slots, or None when no feasible start was found."""
        routes = self.savings()
        if len(routes) > self.k:
            routes = self.reduce_routes(routes)
        if routes is None:
            bins = self.pack(rng)
            routes = [self.nearest_neighbor_order(b) for b in bins if b]
        routes = routes + [[] for _ in range(self.k - len(routes))]
        if not self.feasible(routes):
            routes = self.repair(routes)
        return routes

    def repair(self, routes):
        """Descend with an escalating penalty until feasible; None if that fails."""
        saved = self.penalty
        try:
            for _ in range(_PENALTY_ESCALATIONS):
                self.penalty *= 10.0
                routes = self.descend(routes)
                if self.feasible(routes):
                    return routes
                if self.clock.expired():
                    break
            return None
        finally:
            self.penalty = saved

    # -- local search ------------------------------------------------------

    def descend(self, routes):
        """First-improvement descent under the current penalty (compiled)."""
        if self.clock.expired():
            return routes
        R = np.zeros((self.k, self.m + 1), dtype=np.int64)
        L = np.zeros(self.k, dtype=np.int64)
        W = np.zeros(self.k, dtype=np.int64)
        for i, r in enumerate(routes):
            R[i, : len(r)] = r
            L[i] = len(r)
            W[i] = self.load(r)
        descend_kernel(self.d_arr, self.dem_arr, self.cap, float(self.penalty), R, L, W)
        return [R[i, : L[i]].tolist() for i in range(self.k)]

    # -- perturbation ------------------------------------------------------

    def ruin(self, routes, rng, neighbours):
        """Remove strings of adjacent customers from routes near a random seed."""
        m = self.m
        nonempty = [r for r in routes if r]
        avg_len = m / max(1, len(nonempty))
        max_string = max(1.0, min(_MAX_STRING, avg_len))
        max_routes = max(1.0, 4.0 * _MEAN_REMOVED / (1.0 + max_string) - 1.0)
        n_routes = int(rng.uniform(1.0, max_routes + 1.0))
        where = {c: ri for ri, r in enumerate(routes) for c in r}
        seed_c = rng.randint(1, m)
        touched, removed = set(), []
        routes = [r[:] for r in routes]
        for c in [seed_c] + neighbours[seed_c]:
            if len(touched) >= n_routes:
                break
            ri = where[c]
            if ri in touched or c in removed:
                continue
            r = routes[ri]
            length = int(rng.uniform(1.0, min(len(r), max_string) + 1.0))
            pos = r.index(c)
            lo = rng.randint(max(0, pos - length + 1), min(pos, len(r) - length))
            removed.extend(r[lo : lo + length])
            del r[lo : lo + length]
            touched.add(ri)
        return routes, removed

    def recreate(self, routes, removed, rng):
        """Cheapest insertion in a randomly chosen order; positions blink out at random."""
        d = self.d
        loads = [self.load(r) for r in routes]
        how = rng.random()
        rng.shuffle(removed)
        if how < 0.4:
            removed.sort(key=lambda c: -self.dem[c])
        elif how < 0.6:
            removed.sort(key=lambda c: -d[0][c])
        elif how < 0.7:
            removed.sort(key=lambda c: d[0][c])
        for c in removed:
            q = self.dem[c]
            dc = d[c]
            best = None
            opened = False
            for ri, r in enumerate(routes):
                pen = self.penalty * (self.excess(loads[ri] + q) - self.excess(loads[ri]))
                if not r:
                    if opened:
                        continue
                    opened = True
                    delta = 2 * dc[0] + pen
                    if best is None or delta < best[0] - _EPS:
                        best = (delta, ri, 0)
                    continue
                prev = 0
                for pos in range(len(r) + 1):
                    nxt = r[pos] if pos < len(r) else 0
                    if rng.random() >= _BLINK:
                        delta = d[prev][c] + dc[nxt] - d[prev][nxt] + pen
                        if best is None or delta < best[0] - _EPS:
                            best = (delta, ri, pos)
                    prev = nxt
            if best is None:
                best = self.cheapest_insertion(routes, loads, c)
            _, ri, pos = best
            routes[ri].insert(pos, c)
            loads[ri] += q
        return routes

    def ruin_recreate(self, routes, rng, neighbours):
        routes, removed = self.ruin(routes, rng, neighbours)
        return self.recreate(routes, removed, rng)

    def adapt_penalty(self, was_feasible):
        if was_feasible:
            self.penalty = max(self.penalty / 1.1, self.base_penalty / 100.0)
        else:
            self.penalty = min(self.penalty * 1.3, self.base_penalty * 1000.0)


def solve_heuristic(sub, budget=None, seed=0, on_incumbent=None):
    """Best solution found for ``sub`` within ``budget``.

    ``on_incumbent(objective, elapsed_seconds)`` fires for the first feasible
    solution and for every strict improvement after it. Runs are fully
    reproducible when the budget is an iteration count.
    """
    budget = Budget(iterations=1000) if budget is None else budget
    inst = sub.inst
    subset = list(sub.subset)
    k = int(sub.vehicles)
    if sum(int(inst.demands[c]) for c in subset) > k * inst.capacity:
        return Solution.infeasible(HEURISTIC, "infeasible_subproblem")

    clock = _Clock(budget)
    rng = random.Random(seed)
    verts = [0] + subset
    dm = inst.distance_matrix()
    d = dm[np.ix_(verts, verts)].tolist()
    dem = [0] + [int(inst.demands[c]) for c in subset]
    search = _Search(d, dem, inst.capacity, k, clock)

    routes = search.construct(rng)
    if routes is None:
        return Solution.infeasible(HEURISTIC, "construction_failed")

    def emit(cost):
        if on_incumbent is not None:
            on_incumbent(cost, clock.elapsed())

    best = [r[:] for r in routes]
    best_cost = search.cost(best)
    emit(best_cost)

    if budget.iterations != 0:
        cur = search.descend([r[:] for r in routes])
        if not search.feasible(cur):
            cur = search.repair(cur) or [r[:] for r in best]
        cur_cost = search.cost(cur)
        if cur_cost < best_cost - _EPS:
            best, best_cost = [r[:] for r in cur], cur_cost
            emit(best_cost)
        m = search.m
        neighbours = [[]] + [
            sorted((j for j in range(1, m + 1) if j != i), key=lambda j: (d[i][j], j))
            for i in range(1, m + 1)
        ]
        it = 0
        while m > 1 and not clock.done(it):
            it += 1
            cand = search.descend(search.ruin_recreate(cur, rng, neighbours))
            ok = search.feasible(cand)
            search.adapt_penalty(ok)
            if not ok:
                cand = search.repair(cand)
                if cand is None:
                    continue
            cost = search.cost(cand)
            if cost < best_cost - _EPS:
                best, best_cost = [r[:] for r in cand], cost
                emit(best_cost)
            slack = _ACCEPT_SLACK * (1.0 - clock.progress(it))
            if cost < cur_cost - _EPS or cost <= best_cost * (1.0 + slack):
                cur, cur_cost = cand, cost

    seqs = [[subset[c - 1] for c in r] for r in best if r]
    return Solution.from_sequences(seqs, inst, source=HEURISTIC)

"""Exact CVRP solver for tiny subproblems (Held-Karp per route plus a partition DP)."""

from __future__ import annotations

import math

from ..exceptions import DomainError
from .model import EXACT_SOURCE, Solution

EXACT_LIMIT = 10


def _held_karp(d, m):
    """Optimal closed-tour cost and order for every subset of customers 1..m.

    ``d`` is a local distance matrix with the depot at index 0. Returns
    ``(tour_cost, tour_order)`` indexed by bitmask, bit ``i`` standing for
    local customer ``i + 1``.
    """
    full = 1 << m
    inf = math.inf
    # best[mask][last]: cheapest depot->...->last path visiting exactly mask
    best = [[inf] * m for _ in range(full)]
    parent = [[-1] * m for _ in range(full)]
    for i in range(m):
        best[1 << i][i] = d[0][i + 1]
    for mask in range(1, full):
        row = best[mask]
        for last in range(m):
            cur = row[last]
            if cur == inf or not mask >> last & 1:
                continue
            dl = d[last + 1]
            for nxt in range(m):
                if mask >> nxt & 1:
                    continue
                nm = mask | 1 << nxt
                val = cur + dl[nxt + 1]
                if val < best[nm][nxt]:
                    best[nm][nxt] = val
                    parent[nm][nxt] = last
    tour_cost = [0.0] * full
    tour_order = [()] * full
    for mask in range(1, full):
        cost, end = inf, -1
        for last in range(m):
            if mask >> last & 1:
                val = best[mask][last] + d[last + 1][0]
                if val < cost:
                    cost, end = val, last
        order = []
        cur_mask, cur = mask, end
        while cur != -1:
            order.append(cur + 1)
            prev = parent[cur_mask][cur]
            cur_mask ^= 1 << cur
            cur = prev
        tour_cost[mask] = cost
        tour_order[mask] = tuple(reversed(order))
    return tour_cost, tour_order


def solve_exact(sub):
    """Provably optimal solution with at most ``sub.vehicles`` routes."""
    subset = list(sub.subset)
    m = len(subset)
    if m > EXACT_LIMIT:
        raise DomainError(f"exact solver handles at most {EXACT_LIMIT} customers, got {m}")
    inst = sub.inst
    verts = [0] + subset
    dm = inst.distance_matrix()
    d = dm[verts][:, verts].tolist()
    dem = [int(inst.demands[c]) for c in subset]
    cap = inst.capacity
    full = 1 << m
    tour_cost, tour_order = _held_karp(d, m)

    load = [0] * full
    for mask in range(1, full):
        low = (mask & -mask).bit_length() - 1
        load[mask] = load[mask & (mask - 1)] + dem[low]
    route = [tour_cost[s] if load[s] <= cap else math.inf for s in range(full)]
    route[0] = math.inf

    # f[mask]: cheapest cover of mask by at most k routes, grown one k at a time
    inf = math.inf
    f = route[:]
    f[0] = 0.0
    choice = [[mask] if mask and route[mask] < inf else None for mask in range(full)]
    for _ in range(1, max(1, sub.vehicles)):
        g = f[:]
        g_choice = choice[:]
        for mask in range(1, full):
            low = mask & -mask
            rest = mask ^ low
            # sub ranges over subsets of mask that contain its lowest bit
            s = rest
            while True:
                part = s | low
                other = mask ^ part
                if other and route[part] < inf and f[other] < inf:
                    val = route[part] + f[other]
                    if val < g[mask] - 1e-12:
                        g[mask] = val
                        g_choice[mask] = [part] + choice[other]
                if s == 0:
                    break
                s = (s - 1) & rest
        f, choice = g, g_choice

    target = full - 1
    if m == 0 or f[target] == inf:
        return Solution.infeasible(EXACT_SOURCE)
    seqs = [[subset[i - 1] for i in tour_order[part]] for part in choice[target]]
    sol = Solution.from_sequences(seqs, inst, source=EXACT_SOURCE)
    return sol

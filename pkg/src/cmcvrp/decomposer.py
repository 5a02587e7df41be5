"""Recursive bisection of the customer set through the constrained max-cut."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .annealer import AnnealParams
from .exceptions import DomainError
from .instance import EXACT
from .metrics import count_variables, vr_rate
from .qubo import ABD, CmcSpec, alpha_for, normalize_method, polar_angles, search_mu

DEFAULT_MAX_VARIABLES = 100


@dataclass
class PartitionNode:
    subset: tuple
    depth: int = 0
    split_mu: float | None = None
    children: list = field(default_factory=list)
    method: str | None = None
    alpha: float | None = None
    fallback: bool = False
    sa_time: float = 0.0

    @property
    def is_leaf(self):
        return not self.children

    def leaves(self):
        """Leaf nodes in depth-first order, first child first."""
        if self.is_leaf:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def nodes(self):
        out = [self]
        for child in self.children:
            out.extend(child.nodes())
        return out

    def total_sa_time(self):
        return sum(n.sa_time for n in self.nodes())

    def to_dict(self, timing=False):
        d = {
            "subset": list(self.subset),
            "depth": self.depth,
            "mu": self.split_mu,
            "method": self.method,
            "alpha": self.alpha,
            "fallback": self.fallback,
            "children": [c.to_dict(timing) for c in self.children],
        }
        if timing:
            d["sa_time"] = self.sa_time
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            subset=tuple(d["subset"]),
            depth=d.get("depth", 0),
            split_mu=d.get("mu"),
            children=[cls.from_dict(c) for c in d.get("children", [])],
            method=d.get("method"),
            alpha=d.get("alpha"),
            fallback=d.get("fallback", False),
            sa_time=d.get("sa_time", 0.0),
        )


def tree_to_json(root):
    """Canonical JSON for a partition tree; identical trees give identical bytes."""
    return json.dumps(root.to_dict(), sort_keys=True, indent=1) + "\n"


def tree_from_json(text):
    return PartitionNode.from_dict(json.loads(text))


@dataclass
class Subproblem:
    subset: tuple
    vehicles: int
    inst: object = field(repr=False)

    def __post_init__(self):
        self.subset = tuple(int(c) for c in self.subset)
        if not self.subset:
            raise DomainError("subproblem needs at least one customer")
        if self.vehicles < 1:
            raise DomainError("subproblem needs at least one vehicle")

    @property
    def demand(self):
        return int(self.inst.demands[list(self.subset)].sum())

    @property
    def n_variables(self):
        s = len(self.subset)
        return count_variables(s + 1, s, self.vehicles)


def vehicles_for(subset, inst):
    """Vehicles needed by the subset's total demand: max(1, ceil(sum d / Q))."""
    subset = list(subset)
    if not subset:
        raise DomainError("subset must be non-empty")
    total = int(inst.demands[subset].sum())
    return max(1, -(-total // inst.capacity))


def master_subproblem(inst):
    return Subproblem(tuple(inst.customers), inst.vehicles, inst)


def make_subproblems(root, inst):
    return [Subproblem(leaf.subset, vehicles_for(leaf.subset, inst), inst) for leaf in root.leaves()]


def subset_seed(seed, subset):
    """Seed of a split; depends only on the master seed and the subset."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *sorted(int(c) for c in subset)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def fallback_split(inst, subset, alpha, method):
    """Deterministic demand-balanced split used when penalty tuning fails.

    Customers are ordered by polar angle (ABD) or by distance to the subset
    centroid (DBD); the prefix whose demand is closest to ``alpha`` times
    the total becomes the first side.
    """
    subset = sorted(subset)
    if method == ABD:
        theta = polar_angles(inst, subset)
        order = sorted(subset, key=lambda c: (theta[c], c))
    else:
        pts = inst.coords[subset]
        centre = pts.mean(axis=0)
        dist = {c: float(np.hypot(*(inst.coords[c] - centre))) for c in subset}
        order = sorted(subset, key=lambda c: (dist[c], c))
    d = inst.demands[order]
    target = alpha * d.sum()
    prefix = np.cumsum(d)[:-1]
    cut = int(np.argmin(np.abs(prefix - target))) + 1
    return tuple(sorted(order[:cut])), tuple(sorted(order[cut:]))


def _ensure_nonempty(s1, s2):
    if not s1:
        s1, s2 = (s2[-1],), s2[:-1]
    elif not s2:
        s1, s2 = s1[:-1], (s1[-1],)
    return s1, s2


def decompose(
    inst,
    method,
    max_variables=DEFAULT_MAX_VARIABLES,
    seed=0,
    *,
    params=None,
    balance_tol=None,
    mu_step=None,
    max_steps=1000,
    mu_search="linear",
    mu_schedule="linear",
    recompute_alpha=True,
    distance_mode=EXACT,
):
    """Split the customer set until every part has at most ``max_variables`` customers.

    Every split solves a penalty-tuned CMC with restart annealing. The
    demand share ``alpha`` is recomputed from each subset's own vehicle
    requirement unless ``recompute_alpha`` is false, in which case the
    master fleet size is used at every level. Subsets that need a single
    vehicle are split in half by demand.
    """
    method = normalize_method(method)
    if max_variables < 2:
        raise DomainError("max_variables must be at least 2")
    params = AnnealParams() if params is None else params

    root = PartitionNode(tuple(inst.customers), 0)
    work = [root]
    while work:
        node = work.pop()
        if len(node.subset) <= max_variables:
            continue
        k = vehicles_for(node.subset, inst) if recompute_alpha else inst.vehicles
        # a single-vehicle share would target an empty side; halve instead
        alpha = alpha_for(max(2, k))
        spec = CmcSpec(method, node.subset, alpha)
        found = search_mu(
            spec,
            inst,
            params,
            subset_seed(seed, node.subset),
            balance_tol=balance_tol,
            mu_step=mu_step,
            max_steps=max_steps,
            search=mu_search,
            schedule=mu_schedule,
            distance_mode=distance_mode,
            raise_on_failure=False,
        )
        node.method, node.alpha, node.sa_time = method, alpha, found.sa_time
        if found.balanced:
            s1, s2 = found.partition
            node.split_mu = found.mu
        else:
            s1, s2 = fallback_split(inst, node.subset, alpha, method)
            node.fallback = True
        s1, s2 = _ensure_nonempty(tuple(sorted(s1)), tuple(sorted(s2)))
        node.children = [
            PartitionNode(s1, node.depth + 1),
            PartitionNode(s2, node.depth + 1),
        ]
        work.extend(node.children)
    return root


def leaf_statistics(root, inst):
    """Per-leaf sizes, vehicle counts and variable counts plus totals.

    An unsplit tree is the master problem itself and keeps the master fleet.
    """
    subs = [master_subproblem(inst)] if root.is_leaf else make_subproblems(root, inst)
    n_master = count_variables(inst.n_vertices, inst.n_customers, inst.vehicles)
    n_dec = sum(s.n_variables for s in subs)
    return {
        "leaf_sizes": [len(s.subset) for s in subs],
        "leaf_vehicles": [s.vehicles for s in subs],
        "leaf_demands": [s.demand for s in subs],
        "n_variables_master": n_master,
        "n_variables_decomposed": n_dec,
        "vr_rate": vr_rate(n_master, n_dec),
        "sa_time": root.total_sa_time(),
    }

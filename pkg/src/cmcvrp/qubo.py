"""Constrained max-cut (CMC) QUBO models, Ising conversion and penalty tuning.

A model stores its energy as

    E(x) = offset + sum_i linear[i] * x_i + sum_{i<j} quadratic[i, j] * x_i * x_j

over binary ``x``. Variable ``i`` stands for customer ``var_labels[i]``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DomainError, TuningError
from .instance import EXACT

DBD = "DBD"
ABD = "ABD"
METHODS = (DBD, ABD)

# Default penalty increments: distances span a wide range, angular
# dissimilarities stay in [0, 2].
MU_STEP = {DBD: 1.0, ABD: 0.001}


def normalize_method(method):
    m = str(method).upper()
    if m not in METHODS:
        raise DomainError(f"unknown decomposition method {method!r}; expected DBD or ABD")
    return m


@dataclass(frozen=True, eq=False)
class QuboModel:
    num_vars: int
    linear: dict
    quadratic: dict
    offset: float = 0.0
    var_labels: tuple = None
    _arrays: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        labels = self.var_labels
        if labels is None:
            labels = tuple(range(self.num_vars))
        labels = tuple(int(v) for v in labels)
        if len(labels) != self.num_vars:
            raise DomainError("num_vars must equal len(var_labels)")
        for i in self.linear:
            if not 0 <= i < self.num_vars:
                raise DomainError(f"linear index {i} out of range")
        for a, b in self.quadratic:
            if not a < b:
                raise DomainError(f"quadratic key ({a}, {b}) must satisfy a < b")
            if not (0 <= a and b < self.num_vars):
                raise DomainError(f"quadratic key ({a}, {b}) out of range")
        object.__setattr__(self, "var_labels", labels)
        object.__setattr__(self, "offset", float(self.offset))

    def arrays(self):
        """Cached ``(lin, qi, qj, qv)`` coefficient arrays."""
        arr = self._arrays.get("coo")
        if arr is None:
            lin = np.zeros(self.num_vars)
            for i, v in self.linear.items():
                lin[i] += v
            if self.quadratic:
                keys = np.array(list(self.quadratic.keys()), dtype=np.int64)
                qi, qj = keys[:, 0].copy(), keys[:, 1].copy()
                qv = np.fromiter(self.quadratic.values(), dtype=float, count=len(keys))
            else:
                qi = qj = np.zeros(0, dtype=np.int64)
                qv = np.zeros(0)
            arr = (lin, qi, qj, qv)
            self._arrays["coo"] = arr
        return arr

    def dense(self):
        """Cached symmetric coupling matrix with zero diagonal."""
        mat = self._arrays.get("dense")
        if mat is None:
            _, qi, qj, qv = self.arrays()
            mat = np.zeros((self.num_vars, self.num_vars))
            np.add.at(mat, (qi, qj), qv)
            mat = mat + mat.T
            self._arrays["dense"] = mat
        return mat

    def neighbors(self):
        """Per-variable ``(indices, coefficients)`` adjacency lists."""
        adj = self._arrays.get("adj")
        if adj is None:
            _, qi, qj, qv = self.arrays()
            src = np.concatenate([qi, qj])
            dst = np.concatenate([qj, qi])
            val = np.concatenate([qv, qv])
            order = np.argsort(src, kind="stable")
            src, dst, val = src[order], dst[order], val[order]
            bounds = np.searchsorted(src, np.arange(self.num_vars + 1))
            adj = [
                (dst[bounds[i] : bounds[i + 1]], val[bounds[i] : bounds[i + 1]])
                for i in range(self.num_vars)
            ]
            self._arrays["adj"] = adj
        return adj

    def to_text(self):
        """Sparse ``i j value`` listing; linear terms are written as ``i i value``."""
        lines = [
            f"num_vars {self.num_vars}",
            f"offset {self.offset!r}",
            "labels " + " ".join(str(v) for v in self.var_labels),
        ]
        lines += [f"{i} {i} {float(v)!r}" for i, v in sorted(self.linear.items())]
        lines += [f"{a} {b} {float(v)!r}" for (a, b), v in sorted(self.quadratic.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        num_vars = offset = None
        labels = None
        linear, quadratic = {}, {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "num_vars":
                num_vars = int(parts[1])
            elif parts[0] == "offset":
                offset = float(parts[1])
            elif parts[0] == "labels":
                labels = tuple(int(p) for p in parts[1:])
            else:
                if len(parts) != 3:
                    raise DomainError(f"line {lineno}: expected 'i j value'")
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
                if i == j:
                    linear[i] = linear.get(i, 0.0) + v
                else:
                    key = (min(i, j), max(i, j))
                    quadratic[key] = quadratic.get(key, 0.0) + v
        if num_vars is None:
            raise DomainError("missing num_vars header")
        return cls(num_vars, linear, quadratic, offset or 0.0, labels or None)


def _check_assignment(x, n):
    x = np.asarray(x)
    if x.shape != (n,):
        raise DomainError(f"assignment length {x.size} does not match {n} variables")
    return x.astype(float)


def energy(model, assignment):
    """QUBO energy of a 0/1 assignment."""
    x = _check_assignment(assignment, model.num_vars)
    lin, qi, qj, qv = model.arrays()
    return float(model.offset + lin @ x + np.sum(qv * x[qi] * x[qj]))


@dataclass(frozen=True)
class IsingModel:
    """``H(s) = offset - sum J_ij s_i s_j - sum h_i s_i`` with ``s_i`` in {+1, -1}."""

    num_spins: int
    couplings: dict
    fields: dict
    offset: float = 0.0

    def energy(self, spins):
        s = np.asarray(spins, dtype=float)
        if s.shape != (self.num_spins,):
            raise DomainError("spin vector length does not match num_spins")
        e = self.offset
        e -= sum(v * s[i] * s[j] for (i, j), v in self.couplings.items())
        e -= sum(v * s[i] for i, v in self.fields.items())
        return float(e)


def to_ising(model):
    """Convert through ``x_i = (1 + s_i) / 2``; energies agree on every state."""
    fields = {i: -0.5 * v for i, v in model.linear.items()}
    couplings = {}
    offset = model.offset + 0.5 * sum(model.linear.values())
    for (i, j), b in model.quadratic.items():
        couplings[(i, j)] = -0.25 * b
        fields[i] = fields.get(i, 0.0) - 0.25 * b
        fields[j] = fields.get(j, 0.0) - 0.25 * b
        offset += 0.25 * b
    return IsingModel(model.num_vars, couplings, fields, offset)


def spins_from_bits(x):
    return 2 * np.asarray(x, dtype=int) - 1


# -- CMC construction ---------------------------------------------------------


@dataclass(frozen=True)
class CmcSpec:
    method: str
    subset: tuple
    alpha: float
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        subset = tuple(int(v) for v in self.subset)
        if not subset:
            raise DomainError("CMC subset must be non-empty")
        if len(set(subset)) != len(subset):
            raise DomainError("CMC subset contains duplicates")
        if 0 in subset:
            raise DomainError("CMC subset must exclude the depot")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        if self.mu < 0:
            raise DomainError("mu must be non-negative")
        object.__setattr__(self, "subset", subset)


def alpha_for(vehicles):
    """Demand share targeted on one side of a cut: floor(K/2) / K."""
    if vehicles < 1:
        raise DomainError("vehicle count must be at least 1")
    return (vehicles // 2) / vehicles


def angular_dissimilarity(theta_i, theta_j):
    return 1.0 - math.cos(theta_i - theta_j)


def polar_angles(inst, subset):
    """Polar angle of each customer around the depot, keyed by customer id.

    A customer sitting exactly on the depot gets angle 0 and a warning.
    """
    x0, y0 = inst.coords[0]
    angles = {}
    for c in subset:
        dx, dy = inst.coords[c][0] - x0, inst.coords[c][1] - y0
        if dx == 0 and dy == 0:
            warnings.warn(
                f"customer {c} coincides with the depot; using angle 0", RuntimeWarning
            )
            angles[int(c)] = 0.0
        else:
            angles[int(c)] = math.atan2(dy, dx)
    return angles


def edge_weights(spec, inst, distance_mode=EXACT):
    """Pairwise interaction costs W over ``spec.subset`` (dense, symmetric)."""
    idx = np.asarray(spec.subset)
    if spec.method == DBD:
        return np.array(inst.distance_matrix(distance_mode)[np.ix_(idx, idx)])
    theta = polar_angles(inst, spec.subset)
    t = np.array([theta[c] for c in spec.subset])
    return 1.0 - np.cos(t[:, None] - t[None, :])


def build_cmc(spec, inst, distance_mode=EXACT):
    """QUBO of the balanced cut: sum W (2 x_i x_j - x_i - x_j) + mu (sum h (x - alpha))^2.

    Node weights ``h`` are the customer demands and the edge set is the
    complete graph on the subset.
    """
    w = edge_weights(spec, inst, distance_mode)
    np.fill_diagonal(w, 0.0)
    h = inst.demands[np.asarray(spec.subset)].astype(float)
    mu = float(spec.mu)
    target = spec.alpha * h.sum()

    lin = -w.sum(axis=1) + mu * (h * h - 2.0 * target * h)
    n = len(h)
    iu, ju = np.triu_indices(n, 1)
    quad = 2.0 * w[iu, ju] + 2.0 * mu * h[iu] * h[ju]
    linear = dict(enumerate(lin.tolist()))
    quadratic = dict(zip(zip(iu.tolist(), ju.tolist()), quad.tolist()))
    return QuboModel(n, linear, quadratic, mu * target * target, spec.subset)


def cmc_energy_direct(spec, inst, assignment, distance_mode=EXACT):
    """Evaluate the CMC Hamiltonian term by term from its definition."""
    w = edge_weights(spec, inst, distance_mode)
    x = np.asarray(assignment, dtype=float)
    h = inst.demands[np.asarray(spec.subset)].astype(float)
    n = len(x)
    cut = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            cut += w[i, j] * (2 * x[i] * x[j] - x[i] - x[j])
    return cut + spec.mu * float(np.sum(h * (x - spec.alpha))) ** 2


# -- penalty tuning -------------------------------------------------------------


def mu_schedule(method, step=None, kind="linear"):
    """Return ``k -> mu_k`` for the ascending penalty schedule."""
    step = MU_STEP[normalize_method(method)] if step is None else float(step)
    if step <= 0:
        raise DomainError("mu step must be positive")
    if kind == "linear":
        return lambda k: k * step
    if kind == "geometric":
        return lambda k: 0.0 if k == 0 else step * 2.0 ** (k - 1)
    raise DomainError(f"unknown mu schedule {kind!r}")


def split_from_assignment(labels, assignment):
    x = np.asarray(assignment)
    s1 = tuple(int(c) for c, b in zip(labels, x) if b)
    s2 = tuple(int(c) for c, b in zip(labels, x) if not b)
    return s1, s2


def imbalance(inst, s1, alpha, total):
    return abs(int(inst.demands[list(s1)].sum()) - alpha * total) if s1 else alpha * total


@dataclass
class MuSearch:
    """Outcome of a penalty search (see :func:`search_mu`)."""

    mu: float
    partition: tuple
    balanced: bool
    evaluations: int
    sa_time: float
    energy: float = math.nan
    tried: list = field(default_factory=list)


def search_mu(
    spec_base,
    inst,
    params=None,
    seed=0,
    *,
    balance_tol=None,
    mu_step=None,
    max_steps=1000,
    search="linear",
    schedule="linear",
    distance_mode=EXACT,
    raise_on_failure=True,
):
    """Find the smallest scheduled penalty whose annealed cut is demand-balanced.

    ``search="linear"`` walks the schedule one value at a time.
    ``search="bisect"`` gallops over schedule indices (0, 1, 2, 4, ...) and
    then bisects between the last unbalanced and first balanced index; it
    returns the same value as the linear walk whenever balance is monotone
    in ``mu``.
    """
    from .annealer import AnnealParams, best_of_restarts

    if len(spec_base.subset) < 2:
        raise DomainError("penalty tuning needs at least two customers")
    if max_steps < 1:
        raise DomainError("max_steps must be positive")
    if search not in ("linear", "bisect"):
        raise DomainError(f"unknown mu search {search!r}")
    params = AnnealParams() if params is None else params
    params = replace(params, seed=int(seed))
    mus = mu_schedule(spec_base.method, mu_step, schedule)
    demands = inst.demands[list(spec_base.subset)]
    total = int(demands.sum())
    tol = float(demands.max()) if balance_tol is None else float(balance_tol)

    cache = {}
    best = {"gap": math.inf, "partition": None, "mu": None}
    sa_time = 0.0

    def evaluate(k):
        nonlocal sa_time
        if k in cache:
            return cache[k]
        mu = mus(k)
        model = build_cmc(replace(spec_base, mu=mu), inst, distance_mode)
        t0 = time.perf_counter()
        res = best_of_restarts(model, params)
        sa_time += time.perf_counter() - t0
        s1, s2 = split_from_assignment(model.var_labels, res.best_assignment)
        ok = False
        if s1 and s2:
            gap = imbalance(inst, s1, spec_base.alpha, total)
            ok = gap <= tol
            if gap < best["gap"]:
                best.update(gap=gap, partition=(s1, s2), mu=mu)
        cache[k] = (ok, mu, (s1, s2), res.best_energy)
        return cache[k]

    def done(k):
        _, mu, part, e = cache[k]
        return MuSearch(mu, part, True, len(cache), sa_time, e, sorted(cache))

    last = max_steps - 1
    if search == "linear":
        for k in range(max_steps):
            if evaluate(k)[0]:
                return done(k)
    else:
        lo, hi = None, None
        k = 0
        while True:
            if evaluate(k)[0]:
                hi = k
                break
            lo = k
            if k == last:
                break
            k = min(last, 1 if k == 0 else 2 * k)
        if hi is not None:
            while lo is not None and hi - lo > 1:
                mid = (lo + hi) // 2
                if evaluate(mid)[0]:
                    hi = mid
                else:
                    lo = mid
            return done(hi)

    msg = (
        f"no balanced bipartition within {max_steps} penalty steps "
        f"(tolerance {tol:g}, best imbalance {best['gap']:g})"
    )
    if raise_on_failure:
        raise TuningError(msg, best["partition"], best["mu"])
    return MuSearch(
        best["mu"] if best["mu"] is not None else mus(0),
        best["partition"],
        False,
        len(cache),
        sa_time,
        tried=sorted(cache),
    )


def tune_mu(spec_base, inst, params=None, seed=0, **kwargs):
    """Return ``(mu, (S1, S2))`` for the first penalty that balances demand.

    ``S1`` holds the customers assigned ``x = 1`` (target share ``alpha``).
    Raises :class:`TuningError` when the schedule is exhausted.
    """
    found = search_mu(spec_base, inst, params, seed, **kwargs)
    return found.mu, found.partition

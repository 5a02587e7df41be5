"""Restart simulated annealing for QUBO models.

The inner loop runs in a numba kernel with single-bit Metropolis updates in
a fixed sequential sweep order. Each restart draws from its own splitmix64
stream seeded with ``seed + restart``, so results do not depend on how
restarts are scheduled.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import DomainError
from .qubo import energy

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

# Sampling seed for the automatic beta range; fixed so the range depends on
# the model only.
_BETA_SAMPLE_SEED = 20250101


@dataclass(frozen=True)
class AnnealParams:
    """Annealing settings.

    ``beta_min``/``beta_max`` default to ``None``, meaning they are estimated
    from the model: initial uphill acceptance of about 0.8 and final
    acceptance of about 0.01 for small moves.
    """

    sweeps: int = 1000
    beta_schedule: str = "geometric"
    beta_min: float | None = None
    beta_max: float | None = None
    restarts: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise DomainError("sweeps must be positive")
        if self.restarts < 1:
            raise DomainError("restarts must be at least 1")
        if self.beta_schedule not in ("geometric", "linear"):
            raise DomainError(f"unknown beta schedule {self.beta_schedule!r}")
        for b in (self.beta_min, self.beta_max):
            if b is not None and b <= 0:
                raise DomainError("beta bounds must be positive")
        if (
            self.beta_min is not None
            and self.beta_max is not None
            and not self.beta_min < self.beta_max
        ):
            raise DomainError("beta_min must be smaller than beta_max")


@dataclass
class AnnealResult:
    best_assignment: np.ndarray
    best_energy: float
    wall_time: float
    restarts_run: int
    restart_index: int = 0


@numba.njit(cache=True)
def _next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return state, z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _anneal_kernel(lin, coup, offset, betas, seeds):
    n = lin.shape[0]
    n_restarts = seeds.shape[0]
    best_x = np.zeros((n_restarts, n), dtype=np.int8)
    best_e = np.empty(n_restarts)
    x = np.zeros(n, dtype=np.int8)
    f = np.empty(n)
    for r in range(n_restarts):
        state = seeds[r]
        for i in range(n):
            state, z = _next(state)
            x[i] = np.int8(z >> np.uint64(63))
        for i in range(n):
            f[i] = lin[i]
        for j in range(n):
            if x[j]:
                for i in range(n):
                    f[i] += coup[j, i]
        e = offset
        for i in range(n):
            if x[i]:
                e += 0.5 * (f[i] + lin[i])
        best = e
        best_x[r, :] = x
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                d = f[i] if x[i] == 0 else -f[i]
                if d > 0.0:
                    state, z = _next(state)
                    u = (z >> np.uint64(11)) * _INV53
                    if u >= math.exp(-beta * d):
                        continue
                if x[i]:
                    x[i] = 0
                    for k in range(n):
                        f[k] -= coup[i, k]
                else:
                    x[i] = 1
                    for k in range(n):
                        f[k] += coup[i, k]
                e += d
                if e < best:
                    best = e
                    best_x[r, :] = x
        best_e[r] = best
    return best_x, best_e


def _flip_deltas(lin, coup, x):
    field = lin + coup @ x
    return (1 - 2 * x) * field


def beta_range(model):
    """Estimate ``(beta_min, beta_max)`` from sampled single-flip energy changes."""
    lin, _, _, _ = model.arrays()
    coup = model.dense()
    rng = np.random.default_rng(_BETA_SAMPLE_SEED)
    samples = []
    for _ in range(8):
        x = rng.integers(0, 2, model.num_vars).astype(float)
        samples.append(np.abs(_flip_deltas(lin, coup, x)))
    d = np.concatenate(samples)
    scale = d.max() if d.size else 0.0
    d = d[d > 1e-12 * max(scale, 1.0)]
    if d.size == 0:
        return 1.0, 1.0
    hot = math.log(1 / 0.8) / float(np.median(d))
    cold = math.log(100.0) / float(np.quantile(d, 0.01))
    return hot, max(cold, 10.0 * hot)


def _betas(model, params):
    lo, hi = params.beta_min, params.beta_max
    if lo is None or hi is None:
        auto_lo, auto_hi = beta_range(model)
        lo = auto_lo if lo is None else lo
        hi = auto_hi if hi is None else hi
        hi = max(hi, lo)
    if params.beta_schedule == "geometric":
        return np.geomspace(lo, hi, params.sweeps)
    return np.linspace(lo, hi, params.sweeps)


def _run(model, params, seeds):
    if model.num_vars < 1:
        raise DomainError("cannot anneal a model without variables")
    t0 = time.perf_counter()
    lin, _, _, _ = model.arrays()
    coup = np.ascontiguousarray(model.dense())
    betas = _betas(model, params)
    seeds = np.array([s & 0xFFFFFFFFFFFFFFFF for s in seeds], dtype=np.uint64)
    xs, _ = _anneal_kernel(lin, coup, float(model.offset), betas, seeds)
    # Incremental energies drift; reduce on exact re-evaluation, lowest restart wins ties.
    energies = [energy(model, x) for x in xs]
    r = int(np.argmin(energies))
    return AnnealResult(
        best_assignment=xs[r].astype(np.int8),
        best_energy=energies[r],
        wall_time=time.perf_counter() - t0,
        restarts_run=len(seeds),
        restart_index=r,
    )


def anneal_once(model, params=None, seed=None):
    """One annealing run from a uniformly random start."""
    params = AnnealParams() if params is None else params
    seed = params.seed if seed is None else seed
    return _run(model, params, [int(seed)])


def best_of_restarts(model, params=None):
    """Minimum-energy result over ``params.restarts`` runs seeded ``seed + r``."""
    params = AnnealParams() if params is None else params
    return _run(model, params, [int(params.seed) + r for r in range(params.restarts)])


def delta_energy(model, assignment, flip):
    """Energy change from flipping variable ``flip``; costs O(degree)."""
    n = model.num_vars
    if not 0 <= flip < n:
        raise IndexError(f"variable index {flip} out of range 0..{n - 1}")
    x = np.asarray(assignment)
    if x.shape != (n,):
        raise DomainError("assignment length does not match model")
    lin, _, _, _ = model.arrays()
    idx, coef = model.neighbors()[flip]
    field = lin[flip] + float(coef @ x[idx])
    return field if x[flip] == 0 else -field

"""scikit-learn style front end for the recursive balanced-cut partition."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import _check_sample_weight, check_array, check_is_fitted

from .annealer import AnnealParams
from .decomposer import decompose, vehicles_for
from .exceptions import DomainError
from .instance import Instance
from .qubo import normalize_method


class CMCPartitioner(ClusterMixin, BaseEstimator):
    """Partition customer locations into demand-balanced groups around a depot.

    Each sample is a customer position; ``sample_weight`` carries the
    demands. Groups are produced by recursive balanced max-cuts until every
    group holds at most ``max_variables`` customers.

    Parameters
    ----------
    method : {"ABD", "DBD"}
        Angular (around the depot) or distance-based edge weights.
    max_variables : int
        Largest group size that is not split further.
    capacity : int or None
        Vehicle capacity used to derive the demand share of each cut.
        ``None`` treats the whole demand as one vehicle load.
    depot : array-like of shape (2,) or None
        Depot position; the origin when ``None``.
    restarts, sweeps : int
        Annealing effort per penalty value.
    balance_tol : float or None
        Accepted demand imbalance; the largest demand in the set when ``None``.
    mu_step : float or None
        Penalty increment; method dependent when ``None``.
    random_state : int
        Master seed.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Group index of each sample, groups numbered in depth-first order.
    tree_ : PartitionNode
        Split tree over customer ids ``1..n_samples``.
    group_vehicles_ : list of int
        Vehicles needed by each group.
    sa_time_ : float
        Seconds spent annealing.
    """

    def __init__(
        self,
        method="ABD",
        max_variables=100,
        capacity=None,
        depot=None,
        restarts=100,
        sweeps=1000,
        balance_tol=None,
        mu_step=None,
        random_state=0,
    ):
        self.method = method
        self.max_variables = max_variables
        self.capacity = capacity
        self.depot = depot
        self.restarts = restarts
        self.sweeps = sweeps
        self.balance_tol = balance_tol
        self.mu_step = mu_step
        self.random_state = random_state

    def _instance(self, X, sample_weight):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        if X.shape[1] != 2:
            raise DomainError(f"expected 2-D positions, got {X.shape[1]} columns")
        w = _check_sample_weight(sample_weight, X, dtype=float)
        if np.any(w <= 0) or np.any(w != np.round(w)):
            raise DomainError("sample_weight must hold positive integer demands")
        depot = np.zeros(2) if self.depot is None else np.asarray(self.depot, dtype=float)
        if depot.shape != (2,):
            raise DomainError("depot must be a single 2-D position")
        demands = np.concatenate([[0], w.astype(np.int64)])
        cap = int(demands.sum()) if self.capacity is None else int(self.capacity)
        inst = Instance("samples", np.vstack([depot, X]), demands, cap, 1)
        return inst.with_vehicles(vehicles_for(inst.customers, inst))

    def fit(self, X, y=None, sample_weight=None):
        method = normalize_method(self.method)
        if int(self.max_variables) < 2:
            raise DomainError("max_variables must be at least 2")
        seed = self.random_state
        if not isinstance(seed, (int, np.integer)):
            raise DomainError("random_state must be an integer seed")
        inst = self._instance(X, sample_weight)
        params = AnnealParams(sweeps=int(self.sweeps), restarts=int(self.restarts))
        tree = decompose(
            inst,
            method,
            int(self.max_variables),
            int(seed),
            params=params,
            balance_tol=self.balance_tol,
            mu_step=self.mu_step,
        )
        labels = np.empty(inst.n_customers, dtype=np.int64)
        leaves = tree.leaves()
        for g, leaf in enumerate(leaves):
            labels[np.asarray(leaf.subset) - 1] = g
        self.tree_ = tree
        self.labels_ = labels
        self.group_vehicles_ = [vehicles_for(leaf.subset, inst) for leaf in leaves]
        self.n_groups_ = len(leaves)
        self.sa_time_ = tree.total_sa_time()
        self.n_features_in_ = 2
        return self

    def groups(self):
        """Sample indices of every group, in label order."""
        check_is_fitted(self, "labels_")
        return [np.flatnonzero(self.labels_ == g) for g in range(self.n_groups_)]

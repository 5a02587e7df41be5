"""Scalar metrics: BKS gap, MILP variable counts, VR rate, FS rate."""

from .exceptions import DomainError


def gap(fs_obj, bks_obj):
    """Percentage gap of a feasible objective to the best-known one."""
    if bks_obj <= 0:
        raise DomainError("BKS objective must be positive")
    return (fs_obj - bks_obj) / bks_obj * 100.0


def count_variables(v, s, k):
    """Arc plus order variables of the routing MILP: |V||S|K + |S|K."""
    return v * s * k + s * k


def vr_rate(n_master, n_decomposed):
    """Variable reduction in percent."""
    if n_master <= 0:
        raise DomainError("master variable count must be positive")
    return (1.0 - n_decomposed / n_master) * 100.0


def fs_rate(records):
    """Share of trials (percent) whose integrated solution is master-feasible."""
    records = list(records)
    if not records:
        raise DomainError("fs_rate needs at least one record")
    return 100.0 * sum(1 for r in records if r.fs_flag) / len(records)

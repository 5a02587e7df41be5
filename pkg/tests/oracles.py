"""Reference implementations used only by the tests.

Each oracle solves its problem by the most literal means available
(enumeration, direct summation, an LP text parser) and shares no code with
the package beyond the data types it inspects.
"""

import itertools
import math
import re

import numpy as np


def qubo_energy_direct(n, linear, quadratic, offset, x):
    e = offset
    for i, v in linear.items():
        e += v * x[i]
    for (i, j), v in quadratic.items():
        e += v * x[i] * x[j]
    return e


def enumerate_min(model):
    """Minimum energy over all 2^n assignments, plus every minimiser."""
    n = model.num_vars
    best, arg = math.inf, []
    for bits in itertools.product((0, 1), repeat=n):
        e = qubo_energy_direct(n, model.linear, model.quadratic, model.offset, bits)
        if e < best - 1e-9:
            best, arg = e, [bits]
        elif abs(e - best) <= 1e-9:
            arg.append(bits)
    return best, arg


def all_energies(model):
    """Energy of every assignment, rows in ``itertools.product`` order."""
    n = model.num_vars
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float).reshape(-1, n)
    e = np.full(len(bits), float(model.offset))
    for i, v in model.linear.items():
        e += v * bits[:, i]
    for (i, j), v in model.quadratic.items():
        e += v * bits[:, i] * bits[:, j]
    return bits, e


def ising_energy_direct(ising, spins):
    e = ising.offset
    for (i, j), v in ising.couplings.items():
        e -= v * spins[i] * spins[j]
    for i, v in ising.fields.items():
        e -= v * spins[i]
    return e


def dist(coords, a, b, rounded=True):
    d = math.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
    return math.floor(d + 0.5) if rounded else d


def tour_cost(coords, seq, rounded=True):
    path = [0, *seq, 0]
    return sum(dist(coords, a, b, rounded) for a, b in zip(path, path[1:]))


def set_partitions(items):
    """Every partition of ``items`` into non-empty blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def brute_force_cvrp(coords, demands, capacity, k, customers, rounded=True):
    """Optimal cost by enumerating set partitions and every tour order."""
    best = math.inf
    for part in set_partitions(customers):
        if len(part) > k:
            continue
        if any(sum(demands[c] for c in block) > capacity for block in part):
            continue
        total = 0.0
        for block in part:
            total += min(tour_cost(coords, p, rounded) for p in itertools.permutations(block))
            if total >= best:
                break
        best = min(best, total)
    return best


def check_routes(routes, customers, k_limit, demands, capacity):
    """Literal constraint check; returns True when every rule holds."""
    visits = {}
    for r in routes:
        if not r or 0 in r:
            return False
        if sum(demands[c] for c in r) > capacity:
            return False
        for c in r:
            visits[c] = visits.get(c, 0) + 1
    if set(visits) != set(customers):
        return False
    if any(v != 1 for v in visits.values()):
        return False
    return len(routes) <= k_limit


# -- LP text ----------------------------------------------------------------

_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:e[+-]?\d+)?)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def parse_lp(text):
    """Small parser for the LP subset emitted by the package.

    Returns ``dict(objective, rows, bounds, binaries)`` where ``objective``
    maps variables to coefficients and each row is
    ``(name, coefs, sense, rhs)``. Raises ``ValueError`` on anything that
    does not fit the grammar.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("\\")]
    sections = {"minimize": [], "subject to": [], "bounds": [], "binary": []}
    current = None
    ended = False
    for ln in lines:
        key = ln.strip().lower()
        if key in sections:
            current = key
            continue
        if key == "end":
            ended = True
            break
        if current is None:
            raise ValueError(f"text before first section: {ln!r}")
        sections[current].append(ln)
    if not ended:
        raise ValueError("missing End")

    def coefs(expr):
        out = {}
        pos = 0
        expr = expr.strip()
        while pos < len(expr):
            m = _TERM.match(expr, pos)
            if not m or m.end() == pos:
                raise ValueError(f"bad term at {expr[pos:]!r}")
            sign = -1.0 if m.group(1) == "-" else 1.0
            val = float(m.group(2)) if m.group(2) else 1.0
            out[m.group(3)] = out.get(m.group(3), 0.0) + sign * val
            pos = m.end()
            while pos < len(expr) and expr[pos] == " ":
                pos += 1
        return out

    def statements(block):
        stmts, cur = [], ""
        for ln in block:
            if re.match(r"^\s*[A-Za-z_][A-Za-z0-9_]*:", ln) and cur:
                stmts.append(cur)
                cur = ""
            cur += " " + ln.strip()
        if cur:
            stmts.append(cur)
        return stmts

    obj_stmt = statements(sections["minimize"])
    if len(obj_stmt) != 1:
        raise ValueError("expected one objective")
    objective = coefs(obj_stmt[0].split(":", 1)[1])
    rows = []
    for st in statements(sections["subject to"]):
        name, body = st.split(":", 1)
        m = re.match(r"^(.*?)(<=|>=|=)\s*(-?\d+(?:\.\d*)?)\s*$", body)
        if not m:
            raise ValueError(f"bad row {st!r}")
        rows.append((name.strip(), coefs(m.group(1)), m.group(2), float(m.group(3))))
    bounds = {}
    for ln in sections["bounds"]:
        m = re.match(r"^\s*(-?\d+(?:\.\d*)?)\s*<=\s*([A-Za-z_]\w*)\s*<=\s*(-?\d+(?:\.\d*)?)\s*$", ln)
        if not m:
            raise ValueError(f"bad bound {ln!r}")
        bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
    binaries = [v for ln in sections["binary"] for v in ln.split()]
    return {"objective": objective, "rows": rows, "bounds": bounds, "binaries": binaries}


def lp_variables(lp):
    names = set(lp["objective"]) | set(lp["bounds"]) | set(lp["binaries"])
    for _, c, _, _ in lp["rows"]:
        names |= set(c)
    return sorted(names)


def solve_lp_with_scipy(lp):
    """Optimal objective of the parsed MILP via scipy's HiGHS interface."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    names = lp_variables(lp)
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for v, a in lp["objective"].items():
        c[idx[v]] = a
    A = np.zeros((len(lp["rows"]), n))
    lo = np.full(len(lp["rows"]), -np.inf)
    hi = np.full(len(lp["rows"]), np.inf)
    for r, (_, coef, sense, rhs) in enumerate(lp["rows"]):
        for v, a in coef.items():
            A[r, idx[v]] = a
        if sense in ("=", "<="):
            hi[r] = rhs
        if sense in ("=", ">="):
            lo[r] = rhs
    integrality = np.zeros(n)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    for v in lp["binaries"]:
        integrality[idx[v]] = 1
        ub[idx[v]] = 1
    for v, (a, b) in lp["bounds"].items():
        lb[idx[v]], ub[idx[v]] = a, b
    res = milp(c, constraints=LinearConstraint(A, lo, hi), integrality=integrality, bounds=Bounds(lb, ub))
    return res.fun if res.success else None


def lp_satisfied(lp, values, tol=1e-9):
    """True when ``values`` (missing names read as 0) meets every row and bound."""
    def get(v):
        return values.get(v, 0.0)

    for name, coef, sense, rhs in lp["rows"]:
        lhs = sum(a * get(v) for v, a in coef.items())
        if sense == "=" and abs(lhs - rhs) > tol:
            return False
        if sense == "<=" and lhs > rhs + tol:
            return False
        if sense == ">=" and lhs < rhs - tol:
            return False
    for v, (a, b) in lp["bounds"].items():
        if not a - tol <= get(v) <= b + tol:
            return False
    return True

import numpy as np
import pytest

from cmcvrp.instance import Instance
from cmcvrp.qubo import QuboModel


def make_instance(coords, demands, capacity=100, vehicles=1, name="toy", mode="rounded"):
    """Instance with the depot first in ``coords`` and a leading 0 demand added."""
    return Instance(
        name, np.asarray(coords, dtype=float), np.asarray([0, *demands]), capacity, vehicles, mode
    )


def random_instance(rng, n, *, spread=100, max_demand=10, capacity=None, vehicles=1):
    coords = rng.integers(0, spread, size=(n + 1, 2))
    demands = rng.integers(1, max_demand + 1, size=n)
    cap = int(capacity or max(max_demand, demands.sum()))
    return make_instance(coords, demands, cap, vehicles, name=f"rand{n}")


def random_model(rng, n, density=0.6):
    linear = {i: float(rng.normal()) for i in range(n) if rng.random() < 0.8}
    quadratic = {
        (i, j): float(rng.normal())
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < density
    }
    return QuboModel(n, linear, quadratic, float(rng.normal()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TOY_VRP = """NAME : toy-n5-k2
COMMENT : four customers around the origin
TYPE : CVRP
DIMENSION : 5
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 10
NODE_COORD_SECTION
1 0 0
2 3 4
3 -3 4
4 -3 -4
5 3 -4
DEMAND_SECTION
1 0
2 4
3 5
4 6
5 3
DEPOT_SECTION
1
-1
EOF
"""


@pytest.fixture
def toy_text():
    return TOY_VRP


# -- acceptance reporting -----------------------------------------------------------
# Tests marked ``criterion(n)`` are grouped; one PASS/FAIL line per criterion
# is printed at the end of the session.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and not report.failed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "failed": [], "ran": 0})
    if report.when == "call":
        entry["ran"] += 1
    if report.failed:
        reason = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else ""
        entry["failed"].append(f"{item.name}: {reason.splitlines()[0] if reason else 'failed'}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = "FAIL" if entry["failed"] or not entry["ran"] else "PASS"
        tr.write_line(f"criterion {n:2d} {status}  {entry['title']}")
        for why in entry["failed"]:
            tr.write_line(f"             {why}")

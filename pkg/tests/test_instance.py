import math

import numpy as np
import pytest

from cmcvrp.exceptions import (
    CvrpParseError,
    DomainError,
    InfeasibleInstanceError,
    UnknownInstanceError,
)
from cmcvrp.instance import (
    EXACT,
    ROUNDED,
    bks_registry,
    bundled_instances,
    cur,
    distance,
    load_bks,
    load_bundled,
    parse_cvrplib,
    read_instance,
    write_cvrplib,
)
from conftest import TOY_VRP, make_instance


def test_parse_toy(toy_text):
    inst = parse_cvrplib(toy_text)
    assert inst.name == "toy-n5-k2"
    assert inst.n_vertices == 5
    assert inst.vehicles == 2
    assert inst.capacity == 10
    assert list(inst.demands) == [0, 4, 5, 6, 3]
    assert inst.distance_mode == ROUNDED


def test_parse_m151():
    inst = load_bundled("M-n151-k12")
    assert inst.n_customers == 150
    assert inst.vehicles == 12
    assert inst.capacity == 200


def test_minimal_three_vertices():
    text = """NAME : tiny-k1
CAPACITY : 5
NODE_COORD_SECTION
1 0 0
2 1 0
3 0 1
DEMAND_SECTION
1 0
2 1
3 1
DEPOT_SECTION
1
-1
EOF
"""
    inst = parse_cvrplib(text)
    assert inst.n_vertices == 3


def test_missing_demand_section():
    text = TOY_VRP.split("DEMAND_SECTION")[0] + "DEPOT_SECTION\n1\n-1\nEOF\n"
    with pytest.raises(CvrpParseError, match="DEMAND_SECTION missing"):
        parse_cvrplib(text)


def test_non_numeric_token_reports_line():
    text = TOY_VRP.replace("3 -3 4", "3 -3 four")
    with pytest.raises(CvrpParseError) as err:
        parse_cvrplib(text)
    assert "line 10" in str(err.value)


def test_demand_over_capacity():
    text = TOY_VRP.replace("4 6\n", "4 11\n")
    with pytest.raises(InfeasibleInstanceError):
        parse_cvrplib(text)


def test_vehicle_sources():
    no_suffix = TOY_VRP.replace("toy-n5-k2", "toy")
    with pytest.raises(CvrpParseError):
        parse_cvrplib(no_suffix)
    assert parse_cvrplib(no_suffix, vehicles=3).vehicles == 3
    explicit = no_suffix.replace("CAPACITY : 10", "CAPACITY : 10\nVEHICLES : 4")
    assert parse_cvrplib(explicit).vehicles == 4
    assert parse_cvrplib(TOY_VRP, vehicles=7).vehicles == 7


def test_round_trip(toy_text):
    inst = parse_cvrplib(toy_text)
    again = parse_cvrplib(write_cvrplib(inst))
    assert again == inst
    m = load_bundled("M-n151-k12")
    assert parse_cvrplib(write_cvrplib(m)) == m


def test_read_instance(tmp_path, toy_text):
    path = tmp_path / "toy.vrp"
    path.write_text(toy_text)
    assert read_instance(path, distance_mode="exact").distance_mode == EXACT


def test_distance_examples():
    inst = make_instance([(0, 0), (3, 4), (1, 1)], [1, 1])
    assert distance(inst, 0, 1) == 5
    assert distance(inst, 0, 1, EXACT) == 5
    assert distance(inst, 0, 2) == 1
    assert distance(inst, 0, 2, EXACT) == pytest.approx(math.sqrt(2))
    with pytest.raises(IndexError):
        distance(inst, 0, 3)


def test_distance_symmetric_nonnegative(rng):
    inst = load_bundled("X-n101-k25")
    for _ in range(200):
        i, j = rng.integers(0, inst.n_vertices, 2)
        for mode in (ROUNDED, EXACT):
            d = distance(inst, int(i), int(j), mode)
            assert d >= 0
            assert d == distance(inst, int(j), int(i), mode)


def test_cur_examples():
    assert cur(make_instance([(0, 0), (1, 0), (2, 0)], [5, 5], capacity=10)) == 1.0
    assert cur(load_bundled("M-n151-k12")) == pytest.approx(0.9313, abs=1e-4)
    assert cur(load_bundled("X-n101-k25")) == pytest.approx(0.9994, abs=1e-4)


def test_cur_invariant_under_reordering(rng):
    inst = load_bundled("M-n200-k17")
    perm = np.concatenate([[0], 1 + rng.permutation(inst.n_customers)])
    shuffled = make_instance(inst.coords[perm], inst.demands[perm][1:], inst.capacity, inst.vehicles)
    assert cur(shuffled) == pytest.approx(cur(inst))


def test_bks_lookup(tmp_path):
    assert load_bks("M-n151-k12").bks_objective == 1053
    assert load_bks("X-n261-k13").bks_objective == 26558
    with pytest.raises(UnknownInstanceError, match="registry"):
        load_bks("no-such-instance")
    extra = tmp_path / "bks.tsv"
    extra.write_text("toy-n5-k2\t42\n")
    assert load_bks("toy-n5-k2", extra).bks_objective == 42
    assert len(bks_registry()) == 6


def test_instance_validation():
    with pytest.raises(DomainError):
        make_instance([(0, 0), (1, 1)], [0])
    with pytest.raises(DomainError):
        make_instance([(0, 0), (1, 1)], [1], capacity=0)
    with pytest.raises(UnknownInstanceError):
        load_bundled("nope")
    assert "M-n151-k12" in bundled_instances()

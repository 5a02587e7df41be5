import numpy as np
import pytest

from cmcvrp.annealer import AnnealParams, anneal_once, best_of_restarts, delta_energy
from cmcvrp.exceptions import DomainError
from cmcvrp.qubo import ABD, DBD, CmcSpec, QuboModel, build_cmc, energy
from conftest import make_instance, random_model
from oracles import all_energies


def test_single_variable():
    res = anneal_once(QuboModel(1, {0: -1.0}, {}), AnnealParams(sweeps=10), seed=4)
    assert list(res.best_assignment) == [1]
    assert res.best_energy == -1


def test_zero_model():
    res = anneal_once(QuboModel(4, {}, {}), AnnealParams(sweeps=10))
    assert res.best_energy == 0
    assert res.best_assignment.shape == (4,)


def test_empty_model_rejected():
    with pytest.raises(DomainError):
        anneal_once(QuboModel(0, {}, {}))


def test_never_below_enumerated_minimum(rng):
    for _ in range(5):
        model = random_model(rng, 12)
        _, e = all_energies(model)
        res = anneal_once(model, AnnealParams(sweeps=2000), seed=int(rng.integers(1 << 30)))
        assert res.best_energy >= e.min() - 1e-9
        assert res.best_energy == pytest.approx(energy(model, res.best_assignment))


def test_single_restart_equals_anneal_once(rng):
    model = random_model(rng, 10)
    params = AnnealParams(sweeps=300, restarts=1, seed=77)
    a = best_of_restarts(model, params)
    b = anneal_once(model, params, seed=77)
    assert np.array_equal(a.best_assignment, b.best_assignment)
    assert a.best_energy == b.best_energy


def test_monotone_in_restarts(rng):
    model = random_model(rng, 14)
    energies = [
        best_of_restarts(model, AnnealParams(sweeps=20, restarts=k, seed=5)).best_energy
        for k in range(1, 12)
    ]
    assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_deterministic(rng):
    model = random_model(rng, 12)
    params = AnnealParams(sweeps=200, restarts=8, seed=123)
    a, b = best_of_restarts(model, params), best_of_restarts(model, params)
    assert np.array_equal(a.best_assignment, b.best_assignment)
    assert a.best_energy == b.best_energy
    assert a.restarts_run == 8


def test_cmc_optimum_rate(rng):
    hits = 0
    trials = 30
    for t in range(trials):
        n = 14
        inst = make_instance(rng.uniform(-50, 50, (n + 1, 2)), rng.integers(1, 20, n))
        method = (DBD, ABD)[t % 2]
        mu = [0.5, 0.01][t % 2] * int(rng.integers(0, 4))
        model = build_cmc(CmcSpec(method, tuple(range(1, n + 1)), 0.5, mu), inst)
        _, e = all_energies(model)
        res = best_of_restarts(model, AnnealParams(restarts=100, seed=t))
        hits += res.best_energy <= e.min() + 1e-9 * max(1.0, abs(e.min()))
    assert hits >= 0.95 * trials


def test_delta_energy_examples(rng):
    assert delta_energy(QuboModel(3, {}, {}), [0, 1, 0], 2) == 0
    assert delta_energy(QuboModel(1, {0: -1.0}, {}), [0], 0) == -1
    with pytest.raises(IndexError):
        delta_energy(QuboModel(1, {}, {}), [0], 1)
    model = random_model(rng, 11)
    for _ in range(100):
        x = rng.integers(0, 2, 11)
        i = int(rng.integers(11))
        y = x.copy()
        y[i] ^= 1
        assert delta_energy(model, x, i) == pytest.approx(energy(model, y) - energy(model, x), abs=1e-9)


def test_params_validation():
    with pytest.raises(DomainError):
        AnnealParams(restarts=0)
    with pytest.raises(DomainError):
        AnnealParams(sweeps=0)
    with pytest.raises(DomainError):
        AnnealParams(beta_min=2.0, beta_max=1.0)
    with pytest.raises(DomainError):
        AnnealParams(beta_schedule="cosine")


def test_linear_schedule_runs(rng):
    model = random_model(rng, 8)
    res = best_of_restarts(
        model, AnnealParams(sweeps=100, restarts=3, beta_schedule="linear", beta_min=0.1, beta_max=5)
    )
    assert res.best_energy == pytest.approx(energy(model, res.best_assignment))

import math

import pytest

from cmcvrp.annealer import AnnealParams
from cmcvrp.decomposer import Subproblem
from cmcvrp.exceptions import DomainError, IntegrationError
from cmcvrp.instance import load_bundled
from cmcvrp.pipeline import (
    NAIVE,
    ConvergencePoint,
    EventSink,
    RunRecord,
    convergence_curve,
    curves_to_csv,
    integrate,
    run_decomposed,
    run_naive,
    run_trials,
    summarize,
)
from cmcvrp.routing import Budget, Solution, solve_exact, validate
from conftest import make_instance, random_instance

FAST = AnnealParams(sweeps=200, restarts=10)


# -- convergence curves -------------------------------------------------------------


def test_curve_starts_at_latest_first_incumbent():
    curve = convergence_curve([[(10.0, 120.0)], [(12.0, 95.0)]])
    assert curve == [ConvergencePoint(12.0, 215.0)]


def test_curve_event_updates_sum():
    curve = convergence_curve([[(10.0, 120.0), (20.0, 110.0)], [(12.0, 95.0)]])
    assert [(p.wall_time, p.objective) for p in curve] == [(12.0, 215.0), (20.0, 205.0)]


def test_curve_single_stream_is_identity():
    stream = [(0.5, 300.0), (1.0, 280.0), (4.0, 270.0)]
    curve = convergence_curve([stream])
    assert [(p.wall_time, p.objective) for p in curve] == stream


def test_curve_uses_best_before_start():
    streams = [[(1.0, 100.0), (3.0, 90.0), (9.0, 80.0)], [(5.0, 50.0), (7.0, 45.0)]]
    curve = convergence_curve(streams, bks=100)
    assert [(p.wall_time, p.objective) for p in curve] == [(5.0, 140.0), (7.0, 135.0), (9.0, 125.0)]
    assert curve[0].gap_pct == pytest.approx(40.0)
    objs = [p.objective for p in curve]
    assert objs == sorted(objs, reverse=True)


def test_curve_missing_stream():
    assert convergence_curve([[(1.0, 5.0)], []]) is None
    assert convergence_curve([]) is None


def test_event_sink():
    sink = EventSink(2)
    sink.callback(1)(10.0, 0.5)
    sink.emit(0, 20.0, 0.25)
    assert sink.streams() == [[(0.25, 20.0)], [(0.5, 10.0)]]
    assert len(sink.log) == 2


# -- integration -------------------------------------------------------------------


def two_leaf_instance():
    coords = [(0, 0), (10, 0), (11, 0), (12, 0), (-10, 0), (-11, 0)]
    return make_instance(coords, [4, 4, 4, 4, 4], capacity=8, vehicles=3)


def test_integrate_sums_routes():
    inst = two_leaf_instance()
    a = Subproblem((1, 2, 3), 2, inst)
    b = Subproblem((4, 5), 1, inst)
    sa = Solution.from_sequences([[1, 2], [3]], inst)
    sb = Solution.from_sequences([[4, 5]], inst)
    merged = integrate([(a, sa), (b, sb)])
    assert len(merged.routes) == 3
    assert merged.objective == sa.objective + sb.objective
    assert merged.source == "integrated"
    recomputed = Solution.from_sequences(merged.sequences(), inst)
    assert recomputed.objective == merged.objective
    single = integrate([(a, sa)])
    assert single.sequences() == sa.sequences() and single.objective == sa.objective


def test_integrate_refuses_infeasible():
    inst = two_leaf_instance()
    with pytest.raises(IntegrationError):
        integrate([(Subproblem((1,), 1, inst), Solution.infeasible())])


def test_fleet_excess_fails_master():
    inst = two_leaf_instance().with_vehicles(2)
    a = Subproblem((1, 2, 3), 2, inst)
    b = Subproblem((4, 5), 1, inst)
    merged = integrate([(a, solve_exact(a)), (b, solve_exact(b))])
    rep = validate(merged, inst.customers, inst.vehicles, inst)
    assert not rep.all_clear
    assert rep.vehicle_count_excess > 0


# -- runs -------------------------------------------------------------------------------


def test_run_naive_tiny_optimal(rng):
    inst = random_instance(rng, 5, capacity=20, max_demand=9, vehicles=3)
    rec = run_naive(inst, Budget(iterations=200), seed=0, bks=None)
    assert rec.fs_flag
    assert rec.objective == solve_exact(Subproblem(tuple(inst.customers), 3, inst)).objective
    assert rec.vr_rate == 0
    assert rec.n_variables_decomposed == rec.n_variables_master
    assert rec.method == NAIVE
    objs = [o for _, o in rec.incumbents]
    assert all(b < a for a, b in zip(objs, objs[1:]))


def test_run_naive_zero_iterations():
    inst = load_bundled("M-n151-k12")
    rec = run_naive(inst, Budget(iterations=0), seed=0, bks=1053)
    assert rec.fs_flag == (rec.objective is not None and not rec.violations)
    if rec.fs_flag:
        assert rec.gap_pct == pytest.approx((rec.objective - 1053) / 1053 * 100)


def test_single_leaf_decomposition_matches_naive_formulas(rng):
    inst = random_instance(rng, 20, capacity=40, vehicles=4)
    rec = run_decomposed(inst, "ABD", Budget(iterations=50), seed=1, params=FAST)
    assert rec.subproblem_count == 1
    assert rec.vr_rate == 0
    assert rec.n_variables_decomposed == rec.n_variables_master
    assert rec.sa_time == 0


def test_run_decomposed_m151_records_metrics():
    inst = load_bundled("M-n151-k12")
    rec = run_decomposed(inst, "ABD", Budget(iterations=20), seed=0, params=FAST, bks=1053)
    assert rec.n_variables_master == 273_600
    assert rec.subproblem_count >= 2
    assert sum(rec.leaf_sizes) == 150
    n_dec = sum((s + 1) * s * k + s * k for s, k in zip(rec.leaf_sizes, rec.leaf_vehicles))
    assert rec.n_variables_decomposed == n_dec
    assert rec.vr_rate == pytest.approx(100 * (1 - n_dec / 273_600))
    assert rec.n_variables_decomposed < rec.n_variables_master
    if rec.fs_flag:
        assert validate(rec.routes, inst.customers, inst.vehicles, inst).all_clear
        assert rec.gap_pct is not None
        objs = [o for _, o in rec.incumbents]
        assert objs == sorted(objs, reverse=True)
    else:
        assert rec.gap_pct is None


def test_two_leaf_excess_gives_infeasible_record():
    # each side needs two vehicles on its own; the master fleet has three
    coords = [(0, 0), (10, 0), (11, 0), (12, 1), (-10, 0), (-11, 0), (-12, 1)]
    inst = make_instance(coords, [5, 5, 5, 5, 5, 5], capacity=10, vehicles=3)
    rec = run_decomposed(inst, "ABD", Budget(iterations=20), seed=0, max_variables=3, params=FAST)
    assert rec.subproblem_count == 2
    assert sum(rec.leaf_vehicles) == 4
    assert not rec.fs_flag
    assert rec.gap_pct is None
    assert any("vehicle count excess" in v for v in rec.violations)
    lenient = run_decomposed(
        inst, "ABD", Budget(iterations=20), seed=0, max_variables=3, params=FAST, strict_k=False
    )
    assert lenient.fs_flag


def test_parallel_jobs_match_sequential():
    inst = load_bundled("M-n151-k12")
    kw = dict(seed=3, params=FAST, max_variables=50)
    a = run_decomposed(inst, "DBD", Budget(iterations=30), jobs=1, **kw)
    b = run_decomposed(inst, "DBD", Budget(iterations=30), jobs=2, **kw)
    assert a.routes == b.routes
    assert a.objective == b.objective


def test_run_trials_seeds(rng):
    inst = random_instance(rng, 6, capacity=30, vehicles=2)
    recs = run_trials(inst, "naive", Budget(iterations=10), trials=3, seed=5)
    assert [r.seed for r in recs] == [5, 6, 7]
    assert [r.trial for r in recs] == [0, 1, 2]
    with pytest.raises(DomainError):
        run_trials(inst, "naive", Budget(iterations=10), trials=0)


def test_run_decomposed_rejects_bad_jobs(rng):
    with pytest.raises(DomainError):
        run_decomposed(random_instance(rng, 5), "ABD", Budget(iterations=1), jobs=0)


# -- records and summaries -------------------------------------------------------------


def test_record_json_round_trip():
    rec = RunRecord(
        "toy", "DBD", 2, 7, 0.5, 2, 100, 40, 60.0, True, 123.0, 2.5, [(0.1, 130.0), (0.2, 123.0)], bks=120
    )
    again = RunRecord.from_json(rec.to_json())
    assert again == rec
    assert [p.gap_pct for p in again.curve()] == pytest.approx([100 * 10 / 120, 2.5])


def test_summarize_feasible_only():
    recs = [
        RunRecord("a", "ABD", 0, 0, 1.0, 2, 100, 40, 60.0, True, 110.0, 10.0),
        RunRecord("a", "ABD", 1, 1, 3.0, 2, 100, 50, 50.0, True, 105.0, 5.0),
        RunRecord("a", "ABD", 2, 2, 2.0, 2, 100, 45, 55.0, False),
        RunRecord("b", "naive", 0, 0, 0.0, 1, 10, 10, 0.0, False),
    ]
    rows = {r["instance"]: r for r in summarize(recs)}
    a = rows["a"]
    assert a["fs_rate"] == pytest.approx(200 / 3)
    assert a["avg_gap"] == 7.5 and a["min_gap"] == 5.0
    assert a["sa_time"] == 2.0
    assert a["n_variables"] == 45
    assert a["vr_rate"] == 55.0
    assert rows["b"]["avg_gap"] is None


def test_curves_csv():
    rec = RunRecord("a", "ABD", 3, 0, 0.0, 1, 1, 1, 0.0, True, 90.0, None, [(0.0125, 100.0), (1.5, 90.0)])
    lines = curves_to_csv([rec]).splitlines()
    assert lines[0] == "trial,wall_ms,objective,gap_pct"
    assert lines[1] == "3,12.5,100,"
    assert lines[2] == "3,1500.0,90,"
    assert not math.isnan(rec.curve()[0].objective)

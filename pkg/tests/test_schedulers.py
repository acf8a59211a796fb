import pytest

from polysched.engine import metrics, simulate
from polysched.errors import ConfigError, SchedulerError, UnsupportedFamilyError
from polysched.instances import Instance, make_job
from polysched.polytope import PackingPolytope, build_polytope, check_feasible
from polysched.schedulers import (
    SCHEDULERS,
    DominantResourceFairness,
    MaxMinFair,
    ProportionalFairness,
    drf_allocate,
    make_scheduler,
    maxmin_allocate,
    pf_allocate,
    progressive_fill,
)
from polysched.schedulers.drf import dominant_shares


def test_pf_decision_is_weighted(single_resource, make_view):
    d = pf_allocate(make_view(single_resource))
    assert [d.rates[j] for j in (0, 1, 2)] == pytest.approx([0.25, 0.5, 0.25], rel=1e-7)
    assert d.duals
    assert d.report.certified


def test_pf_schedule_on_one_resource(single_resource):
    tr = simulate(single_resource, ProportionalFairness())
    assert tr.completions[1] == pytest.approx(2.0, rel=1e-6)
    assert tr.completions[0] == pytest.approx(3.0, rel=1e-6)
    assert tr.completions[2] == pytest.approx(4.0, rel=1e-6)
    assert metrics(tr).weighted_completion == pytest.approx(11.0, rel=1e-6)


def test_pf_keeps_cuts_between_events():
    jobs = tuple(make_job(j, 1.0, 1.0 + j, 0.0, [1.0, 1.0]) for j in range(3))
    inst = Instance(family="unrelated", jobs=jobs, capacities=(1.0, 1.0))
    sched = ProportionalFairness()
    tr = simulate(inst, sched)
    assert tr.has_duals
    assert sched._cuts
    assert all(k.startswith("cut:") for k in sched._cuts)


def test_progressive_fill_freezes_saturated_rows():
    P = PackingPolytope.from_matrix([[1.0, 1.0, 1.0], [5.0, 0.0, 0.0]], [0, 1, 2])
    x = progressive_fill(P)
    assert [x[j] for j in (0, 1, 2)] == pytest.approx([0.2, 0.4, 0.4])


def test_maxmin_is_round_robin_on_one_resource(single_resource, make_view):
    d = maxmin_allocate(make_view(single_resource))
    assert [d.rates[j] for j in (0, 1, 2)] == pytest.approx([1 / 3] * 3)
    tr = simulate(single_resource, MaxMinFair())
    assert tr.completions[0] == pytest.approx(3.0)
    assert tr.completions[1] == pytest.approx(3.0)
    assert tr.completions[2] == pytest.approx(4.0)


def test_maxmin_on_lifted_polytope(make_view):
    jobs = tuple(make_job(j, 1.0, 1.0, 0.0, [1.0, 1.0]) for j in range(3))
    inst = Instance(family="unrelated", jobs=jobs, capacities=(1.0, 1.0))
    d = maxmin_allocate(make_view(inst))
    assert [d.rates[j] for j in range(3)] == pytest.approx([2 / 3] * 3, rel=1e-6)
    assert check_feasible(build_polytope(inst, [0, 1, 2]), d.rates, tol=1e-7).feasible


def test_maxmin_has_no_duals(unrelated):
    tr = simulate(unrelated, MaxMinFair())
    assert not tr.has_duals


def test_progressive_fill_rejects_lifted(unrelated):
    with pytest.raises(SchedulerError):
        progressive_fill(build_polytope(unrelated, [0, 1]))


def test_drf_equalizes_dominant_shares(make_view):
    jobs = (make_job(0, 1.0, 1.0, 0.0, [10.0, 40.0]), make_job(1, 1.0, 1.0, 0.0, [30.0, 10.0]))
    inst = Instance(family="multidim", jobs=jobs, capacities=(9.0, 18.0))
    dominant = dominant_shares({j.id: j.payload for j in jobs}, inst.capacities)
    assert dominant[0] == pytest.approx(40 / 18)
    assert dominant[1] == pytest.approx(30 / 9)
    d = drf_allocate(make_view(inst))
    assert d.rates[0] == pytest.approx(0.3)
    assert d.rates[1] == pytest.approx(0.2)
    assert d.rates[0] * dominant[0] == pytest.approx(d.rates[1] * dominant[1])


def test_drf_needs_multidim(unrelated, make_view):
    with pytest.raises(UnsupportedFamilyError):
        drf_allocate(make_view(unrelated))
    with pytest.raises(UnsupportedFamilyError):
        simulate(unrelated, DominantResourceFairness())


def test_make_scheduler():
    assert set(SCHEDULERS) == {"pf", "maxmin", "drf", "blass"}
    assert isinstance(make_scheduler("pf", tol=1e-9), ProportionalFairness)
    assert make_scheduler("blass", epsilon=0.25).info()["k"] == 4
    with pytest.raises(ConfigError):
        make_scheduler("srpt")
    with pytest.raises(ConfigError):
        make_scheduler("maxmin", tol=1e-9)

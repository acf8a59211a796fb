import dataclasses
import math

import pytest

from polysched.engine import check_trace, export_trace, load_trace, metrics, next_completion, simulate
from polysched.errors import (
    IncompleteTraceError,
    InfeasibleDecisionError,
    LivelockError,
    NoProgressError,
    SimulationError,
)
from polysched.instances import Instance, make_job
from polysched.schedulers import ProportionalFairness, Scheduler, SchedulerDecision


class FixedRates(Scheduler):
    name = "fixed"

    def __init__(self, rates):
        self.rates = rates
        self.views = []

    def decide(self, view):
        self.views.append(view)
        return SchedulerDecision(rates={j: self.rates.get(j, 0.0) for j in view.alive})


class Recorder(Scheduler):
    name = "recorder"

    def __init__(self):
        self.calls = []

    def on_arrival(self, view, job_ids):
        self.calls.append(("arrival", view.time, tuple(job_ids)))

    def on_completion(self, view, job_ids):
        self.calls.append(("completion", view.time, tuple(job_ids)))

    def decide(self, view):
        share = 1.0 / len(view.alive)
        return SchedulerDecision(rates={j: share for j in view.alive})


def _single(sizes, releases=None):
    releases = releases or [0.0] * len(sizes)
    jobs = tuple(make_job(j, 1.0, p, r, [1.0]) for j, (p, r) in enumerate(zip(sizes, releases)))
    return Instance(family="multidim", jobs=jobs, capacities=(1.0,))


def test_next_completion_ties():
    delta, done = next_completion({0: 1.0, 1: 2.0, 2: 1.0}, {0: 0.5, 1: 1.0, 2: 0.5})
    assert delta == pytest.approx(2.0)
    assert done == [0, 1, 2]
    with pytest.raises(NoProgressError):
        next_completion({0: 1.0}, {0: 0.0})


def test_round_robin_completions():
    tr = simulate(_single([1.0, 2.0]), Recorder())
    assert tr.completions[0] == pytest.approx(2.0)
    assert tr.completions[1] == pytest.approx(3.0)
    m = metrics(tr)
    assert m.weighted_completion == pytest.approx(5.0)
    assert m.makespan == pytest.approx(3.0)
    assert check_trace(tr).ok


def test_hooks_fire_at_event_times():
    sched = Recorder()
    simulate(_single([1.0, 1.0], [0.0, 0.5]), sched)
    kinds = [(k, round(t, 9), ids) for k, t, ids in sched.calls]
    assert kinds[0] == ("arrival", 0.0, (0,))
    assert kinds[1] == ("arrival", 0.5, (1,))
    assert kinds[2] == ("completion", 1.5, (0,))
    assert kinds[3] == ("completion", 2.0, (1,))


def test_idle_gap_is_a_segment():
    tr = simulate(_single([1.0, 1.0], [0.0, 3.0]), Recorder())
    assert [(s.start, s.end) for s in tr.segments] == [(0.0, 1.0), (1.0, 3.0), (3.0, 4.0)]
    assert tr.segments[1].rates == {}
    assert check_trace(tr).partition_ok


def test_speed_scales_time():
    tr = simulate(_single([2.0]), Recorder(), speed=2.0)
    assert tr.completions[0] == pytest.approx(1.0)
    with pytest.raises(SimulationError):
        simulate(_single([1.0]), Recorder(), speed=0.5)


def test_scheduler_sees_no_sizes():
    sched = FixedRates({0: 0.5, 1: 0.5})
    tr = simulate(_single([1.0, 3.0]), sched)
    assert tr.completions[0] == pytest.approx(2.0)
    assert tr.completions[1] == pytest.approx(6.0)
    fields = {f.name for f in dataclasses.fields(sched.views[0])}
    assert not any("size" in name or "remaining" in name for name in fields)


def test_infeasible_decision_is_rejected():
    with pytest.raises(InfeasibleDecisionError) as e:
        simulate(_single([1.0, 1.0]), FixedRates({0: 0.8, 1: 0.8}))
    assert e.value.segment is not None


def test_zero_rates_livelock():
    with pytest.raises(LivelockError):
        simulate(_single([1.0]), FixedRates({}))


def test_pf_trace_carries_duals(two_resource):
    tr = simulate(two_resource, ProportionalFairness())
    assert tr.has_duals
    assert set(tr.rows) >= {"resource:0", "resource:1"}
    assert check_trace(tr).ok
    assert check_trace(tr).event_count <= 2 * len(two_resource.jobs)


def test_trace_document_round_trip(unrelated):
    tr = simulate(unrelated, ProportionalFairness())
    again = load_trace(export_trace(tr))
    assert again.completions == tr.completions
    assert again.rows == tr.rows
    assert len(again.segments) == len(tr.segments)
    assert again.segments[0].shares == tr.segments[0].shares
    with pytest.raises(SimulationError):
        load_trace('{"segments": []}')


def test_metrics_need_complete_trace():
    tr = simulate(_single([1.0]), Recorder())
    tr.completions.clear()
    with pytest.raises(IncompleteTraceError):
        metrics(tr)


def test_flow_time_counts_from_release():
    tr = simulate(_single([1.0, 1.0], [0.0, 2.0]), Recorder())
    m = metrics(tr)
    assert m.total_flow == pytest.approx(2.0)
    assert m.per_job[1] == (pytest.approx(3.0), pytest.approx(1.0))
    assert math.isclose(m.weighted_completion - m.weighted_flow, 2.0)

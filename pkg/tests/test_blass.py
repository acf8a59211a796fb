import logging
from types import SimpleNamespace

import pytest

import polysched.schedulers.blass as blass
from polysched.engine import check_trace, simulate
from polysched.errors import SchedulerError, UnprocessableJobError, UnsupportedFamilyError
from polysched.instances import Instance, make_job
from polysched.schedulers import (
    BlassConfig,
    BlassScheduler,
    BlassState,
    blass_decision,
    check_slaps_bounds,
    dispatch,
    rate_L,
    rearrange,
    slaps_shares,
)


def _state(speeds):
    state = BlassState.empty(len(speeds[0]))
    for j, s in enumerate(speeds):
        state.ranks[j] = j
        state.speeds[j] = tuple(s)
        state.place(j, dispatch(j, state))
    return state


def test_config():
    cfg = BlassConfig(0.5)
    assert cfg.k == 2
    assert cfg.eta == pytest.approx(2.5)
    with pytest.raises(SchedulerError):
        BlassConfig(0.3)
    with pytest.raises(SchedulerError):
        BlassConfig(0.0)


def test_slaps_shares():
    assert slaps_shares(3, 2) == pytest.approx([1 / 14, 4 / 14, 9 / 14])
    assert sum(slaps_shares(5, 3, eta=2.5)) == pytest.approx(2.5)
    assert slaps_shares(1, 4) == [1.0]
    with pytest.raises(SchedulerError):
        slaps_shares(0, 2)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_slaps_share_bounds(k, n):
    assert check_slaps_bounds(k, n) == (True, True)


def test_dispatch_maximizes_L():
    state = _state([(1.0, 0.5), (1.0, 0.6)])
    assert state.sigma == {0: 0, 1: 1}
    assert rate_L(0, 1, state) == pytest.approx(0.5)
    assert rate_L(1, 1, state) == pytest.approx(0.6)


def test_dispatch_ties_go_to_lowest_machine():
    state = _state([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])
    assert state.sigma == {0: 0, 1: 1, 2: 0}
    assert state.machines[0].jobs == [0, 2]
    assert state.machines[0].local_rank(2) == 2


def test_dispatch_rejects_dead_job():
    state = BlassState.empty(2)
    state.ranks[0] = 0
    state.speeds[0] = (0.0, 0.0)
    with pytest.raises(UnprocessableJobError):
        dispatch(0, state)


def test_rearrange_fills_the_freed_machine():
    state = _state([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])
    machine = state.drop(1)
    moves = rearrange(state, 1, machine)
    assert moves == [(2, 0, 1)]
    assert state.sigma == {0: 0, 2: 1}


def test_rearrange_skips_earlier_jobs():
    state = _state([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])
    machine = state.drop(0)
    assert rearrange(state, 0, machine) == []
    assert state.sigma == {1: 1, 2: 0}


def test_decision_uses_local_ranks():
    state = _state([(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)])
    d = blass_decision(state, BlassConfig(0.5))
    # machine 0 holds jobs 0 and 2: shares 1/5 and 4/5 for k = 2
    assert d.rates[0] == pytest.approx(0.2)
    assert d.rates[2] == pytest.approx(0.8 * 2.0)
    assert d.rates[1] == pytest.approx(1.0)
    assert d.shares[2] == {0: pytest.approx(0.8)}


def test_blass_run_keeps_invariants(unrelated):
    sched = BlassScheduler(epsilon=0.5, check_invariants=True)
    tr = simulate(unrelated, sched, speed=sched.config.eta)
    assert set(tr.completions) == {0, 1, 2, 3}
    assert sched.invariant_log == []
    assert check_trace(tr).ok
    assert tr.scheduler == {"name": "blass", "epsilon": 0.5, "k": 2, "eta": 2.5}


def test_blass_on_router_tree(tree_one):
    sched = BlassScheduler(epsilon=0.5, check_invariants=True)
    tr = simulate(tree_one, sched, speed=2.5)
    assert len(tr.completions) == 4
    assert sched.invariant_log == []


def test_blass_warns_on_weights(caplog):
    jobs = (make_job(0, 2.0, 1.0, 0.0, [1.0]), make_job(1, 1.0, 1.0, 0.0, [1.0]))
    inst = Instance(family="unrelated", jobs=jobs, capacities=(1.0,))
    with caplog.at_level(logging.WARNING, logger="polysched.schedulers.blass"):
        simulate(inst, BlassScheduler(), speed=2.5)
    assert sum("weights are ignored" in r.message for r in caplog.records) == 1


def test_blass_family_check(two_resource):
    with pytest.raises(UnsupportedFamilyError):
        simulate(two_resource, BlassScheduler())


def test_simultaneous_completions_leave_before_rearrange(monkeypatch):
    seen = []
    real = blass.rearrange

    def spy(state, departed, machine, departed_rank=None):
        seen.append(set(state.sigma))
        return real(state, departed, machine, departed_rank=departed_rank)

    monkeypatch.setattr(blass, "rearrange", spy)
    sched = BlassScheduler(epsilon=0.5)
    sched.state = _state([[1.0, 0.5], [0.5, 1.0], [1.0, 1.0], [0.5, 1.0]])
    sched.on_completion(SimpleNamespace(time=1.0), [0, 1])
    assert len(seen) == 2
    assert all(not ({0, 1} & alive) for alive in seen)
    assert set(sched.state.sigma) == {2, 3}

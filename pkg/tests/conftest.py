import pytest

from polysched.engine.simulator import SchedulerView
from polysched.instances import Instance, gen_lower_bound_tree, make_job
from polysched.polytope import build_polytope


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance corpora at full size; deselect with -m 'not slow'")


def view_of(inst, alive=None, time=0.0, speed=1.0):
    ids = tuple(j.id for j in inst.jobs) if alive is None else tuple(alive)
    jobs = inst.job_by_id
    return SchedulerView(time=time, family=inst.family, alive=ids,
                         weights={j: jobs[j].weight for j in ids},
                         payloads={j: jobs[j].payload for j in ids},
                         ranks={j: inst.ranks[j] for j in ids}, capacities=inst.capacities,
                         speed=speed, builder=lambda a: build_polytope(inst, a))


@pytest.fixture
def make_view():
    return view_of


@pytest.fixture
def single_resource():
    """Three jobs on one unit resource, f = R, no releases."""
    jobs = [make_job(0, 1.0, 1.0, 0.0, [1.0]),
            make_job(1, 2.0, 1.0, 0.0, [1.0]),
            make_job(2, 1.0, 2.0, 0.0, [1.0])]
    return Instance(family="multidim", jobs=tuple(jobs), capacities=(1.0,))


@pytest.fixture
def two_resource():
    jobs = [make_job(0, 1.0, 1.0, 0.0, [1.0, 0.2]),
            make_job(1, 1.0, 1.5, 0.0, [0.2, 1.0])]
    return Instance(family="multidim", jobs=tuple(jobs), capacities=(1.0, 1.0))


@pytest.fixture
def unrelated():
    jobs = [make_job(0, 1.0, 1.0, 0.0, [1.0, 0.5]),
            make_job(1, 1.0, 2.0, 0.0, [0.5, 1.0]),
            make_job(2, 1.0, 1.0, 0.5, [1.0, 1.0]),
            make_job(3, 1.0, 0.5, 1.0, [2.0, 0.0])]
    return Instance(family="unrelated", jobs=tuple(jobs), capacities=(1.0, 1.0))


@pytest.fixture
def tree_one():
    """The one-level router instance: sizes {3, 1, 1, 1}, routers (2, 1, 1, 1)."""
    return gen_lower_bound_tree(1, seed=3).to_instance()

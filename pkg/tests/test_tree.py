from fractions import Fraction

import pytest

from polysched.errors import GeneratorError, InstanceError
from polysched.instances import (
    census,
    equal_share_makespan,
    gen_lower_bound_tree,
    verify_tree_witness,
    witness_completions,
)
from polysched.instances.tree import FAST_ROUTER_SPEED


def test_one_level_sizes(tree_one):
    assert sorted(j.size for j in tree_one.jobs) == [1.0, 1.0, 1.0, 3.0]
    assert all(j.payload == (2.0, 1.0, 1.0, 1.0) for j in tree_one.jobs)
    assert tree_one.metadata["witness_makespan"] == pytest.approx(1.5)


def test_one_level_witness_and_equal_share():
    tree = gen_lower_bound_tree(1, seed=0)
    assert verify_tree_witness(tree) == Fraction(3, 2)
    makespan, done = equal_share_makespan(tree.to_instance())
    assert makespan == pytest.approx(9 / 5)
    big = max(tree.jobs, key=lambda j: j.size)
    assert done[big.id] == pytest.approx(1.8)
    assert sorted(done.values())[:3] == pytest.approx([0.8, 0.8, 0.8])


def test_census_counts():
    assert census(2, 1) == {1: 12, 3: 4}
    assert census(1, 0) == {1: 4}
    assert census(2, 2) == {1: 12, 3: 3, 7: 1}
    assert sum(census(2, 1).values()) == 16


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_two_level_tree(seed):
    tree = gen_lower_bound_tree(2, seed=seed)
    assert tree.fanout == 16
    assert len(tree.jobs) == 16 * 16
    big_parent = (tree.big_child[()],)
    under_big = sorted(tree.sizes_under(big_parent))
    assert under_big == [1] * 12 + [3] * 3 + [7]
    other = next(p for p in tree.leaf_parents() if p != big_parent)
    assert sorted(tree.sizes_under(other)) == [1] * 15 + [3]
    assert verify_tree_witness(tree) <= 2


def test_witness_completions():
    one = witness_completions(gen_lower_bound_tree(1, seed=0))
    assert sum(one.values()) == Fraction(9, 2)
    two = gen_lower_bound_tree(2, seed=1)
    finishes = witness_completions(two)
    assert len(finishes) == len(two.jobs)
    assert max(finishes.values()) == verify_tree_witness(two)


def test_big_nodes_ride_the_fast_router():
    tree = gen_lower_bound_tree(2, seed=5)
    for job in tree.jobs:
        rate = FAST_ROUTER_SPEED ** tree.eta(job.path)
        assert Fraction(job.size, rate) <= 2


def test_depth_limits():
    with pytest.raises(GeneratorError):
        gen_lower_bound_tree(3, seed=0)
    with pytest.raises(GeneratorError):
        gen_lower_bound_tree(0, seed=0)
    with pytest.raises(InstanceError):
        gen_lower_bound_tree(2, seed=0).to_instance()

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from ..errors import GeneratorError, InstanceError
from ..utils.defaults import TREE_MAX_DEPTH
from .job import Instance, make_job

logger = logging.getLogger(__name__)

Path = Tuple[int, ...]

FAST_ROUTER_SPEED = 2
FAST_ROUTER = 0


@dataclass(frozen=True)
class TreeJob:
    id: int
    path: Path
    size: int


@dataclass
class TreeInstance:
    """Router tree whose leaves are jobs.

    Every non-leaf node has 4^D children and 4^D routers; router 0 runs at
    speed 2, the others at speed 1. A job's rate is the product of the router
    speeds on its root path.
    """
    depth: int
    fanout: int
    big_child: Dict[Path, int]
    jobs: List[TreeJob]
    seed: int = 0
    router_speeds: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.router_speeds:
            self.router_speeds = tuple([FAST_ROUTER_SPEED] + [1] * (self.fanout - 1))

    def is_big(self, path: Path) -> bool:
        return len(path) > 0 and self.big_child[path[:-1]] == path[-1]

    def eta(self, path: Path) -> int:
        """Number of big nodes among `path` and its non-root ancestors."""
        return sum(1 for h in range(1, len(path) + 1) if self.is_big(path[:h]))

    def leaf_parents(self) -> List[Path]:
        return [p for p in self.big_child if len(p) == self.depth - 1]

    def sizes_under(self, parent: Path) -> List[int]:
        return [j.size for j in self.jobs if j.path[:-1] == parent]

    def total_work(self) -> int:
        return sum(j.size for j in self.jobs)

    def to_instance(self, family: str = "unrelated") -> Instance:
        if self.depth != 1:
            raise InstanceError("only the one-level tree exports as a machine instance")
        speeds = tuple(float(s) for s in self.router_speeds)
        jobs = tuple(make_job(j.id, 1.0, j.size, 0.0, speeds) for j in self.jobs)
        metadata = {"generator": "gen_lower_bound_tree", "depth": 1, "seed": self.seed,
                    "witness_makespan": float(verify_tree_witness(self))}
        return Instance(family=family, jobs=jobs, capacities=tuple([1.0] * self.fanout), metadata=metadata)


def census(depth: int, eta: int) -> Dict[int, int]:
    """Job-size counts below one leaf-parent with `eta` big nodes on its path."""
    out = {}
    for k in range(eta):
        out[2 ** (k + 1) - 1] = 4 ** (depth - eta) * (4 ** (eta - k) - 4 ** (eta - k - 1))
    out[2 ** (eta + 1) - 1] = 4 ** (depth - eta)
    return out


def _leaf_sizes(depth: int, eta: int) -> List[int]:
    """Census sizes with one top-class job promoted a class, following the router-tree construction."""
    counts = Counter(census(depth, eta))
    top = 2 ** (eta + 1) - 1
    counts[top] -= 1
    sizes = sorted(counts.elements())
    # the big child carries one class more; the witness routes it through the fast router
    return [2 ** (eta + 2) - 1] + sizes


def gen_lower_bound_tree(D: int, seed: int) -> TreeInstance:
    if not 1 <= D <= TREE_MAX_DEPTH:
        raise GeneratorError(f"tree depth must be in [1, {TREE_MAX_DEPTH}], got {D}")
    rng = np.random.default_rng(seed)
    fanout = 4 ** D
    big_child: Dict[Path, int] = {}
    frontier: List[Path] = [()]
    for _ in range(D):
        nxt = []
        for node in frontier:
            big_child[node] = int(rng.integers(fanout))
            nxt.extend(node + (c,) for c in range(fanout))
        frontier = nxt

    tree = TreeInstance(depth=D, fanout=fanout, big_child=big_child, jobs=[], seed=seed)
    jobs: List[TreeJob] = []
    for parent in sorted(tree.leaf_parents()):
        sizes = _leaf_sizes(D, tree.eta(parent))
        big = big_child[parent]
        others = [c for c in range(fanout) if c != big]
        order = rng.permutation(len(others))
        assigned = {big: sizes[0]}
        for pos, k in enumerate(order):
            assigned[others[k]] = sizes[1 + pos]
        for c in range(fanout):
            jobs.append(TreeJob(id=len(jobs), path=parent + (c,), size=assigned[c]))
    tree.jobs = jobs
    logger.debug(f"tree instance D={D} with {len(jobs)} jobs")
    return tree


def witness_completions(t: TreeInstance) -> Dict[int, Fraction]:
    """Finish time of each job when routed through its ancestors' 2-speed routers."""
    return {job.id: Fraction(job.size, FAST_ROUTER_SPEED ** t.eta(job.path)) for job in t.jobs}


def verify_tree_witness(t: TreeInstance) -> Fraction:
    """Makespan of routing every big node and big job through its parent's 2-speed router."""
    makespan = max(witness_completions(t).values(), default=Fraction(0))
    if makespan > 2:
        raise InstanceError(f"witness makespan {makespan} exceeds 2")
    return makespan


def equal_share_makespan(inst: Instance) -> Tuple[float, Dict[int, float]]:
    """Makespan when every alive job gets the same rate on a related-machines instance.

    With N alive jobs and speeds sorted descending, the largest common rate is
    (sum of the min(N, M) fastest speeds) / N.
    """
    speeds = sorted(inst.jobs[0].payload, reverse=True)
    if any(sorted(j.payload, reverse=True) != speeds for j in inst.jobs):
        raise InstanceError("equal sharing needs identical speed vectors")
    if any(j.release != 0 for j in inst.jobs):
        raise InstanceError("equal sharing needs all jobs released at time 0")
    remaining = {j.id: float(j.size) for j in inst.jobs}
    done: Dict[int, float] = {}
    now = 0.0
    while remaining:
        n = len(remaining)
        rate = sum(speeds[:min(n, len(speeds))]) / n
        dt = min(remaining.values()) / rate
        now += dt
        for jid in list(remaining):
            remaining[jid] -= rate * dt
            if remaining[jid] <= 1e-12 * inst.job_by_id[jid].size:
                done[jid] = now
                del remaining[jid]
    return now, done

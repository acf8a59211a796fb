import logging
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

from ..errors import GeneratorError
from ..utils.defaults import AON_MAX_JOBS, FAMILIES, TREE_LB_JOBS
from .job import Instance, make_job

logger = logging.getLogger(__name__)

SIZE_DISTS = ("uniform", "exponential", "pareto", "unit")
WEIGHT_DISTS = ("unit", "uniform", "integer")
RELEASE_PROCESSES = ("batch", "poisson")


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    m: int = 2
    size_dist: str = "uniform"
    size_low: float = 0.5
    size_high: float = 2.0
    weight_dist: str = "unit"
    weight_high: float = 5.0
    release: str = "batch"
    arrival_rate: float = 1.0
    demand_density: float = 0.7
    speed_low: float = 0.5
    speed_high: float = 2.0
    zero_speed_prob: float = 0.0

    def validate(self, family: str) -> None:
        if family not in FAMILIES:
            raise GeneratorError(f"unknown family '{family}'")
        if self.n < 1 or self.m < 1:
            raise GeneratorError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if family == "all_or_nothing" and self.n > AON_MAX_JOBS:
            raise GeneratorError(f"all_or_nothing is capped at n <= {AON_MAX_JOBS}, got {self.n}")
        if family == "tree_lb" and self != GeneratorParams(n=TREE_LB_JOBS, m=TREE_LB_JOBS):
            raise GeneratorError(f"tree_lb is the one-level router tree and takes only "
                                 f"n={TREE_LB_JOBS}, m={TREE_LB_JOBS} with default distributions")
        if self.size_dist not in SIZE_DISTS:
            raise GeneratorError(f"size_dist must be one of {SIZE_DISTS}")
        if self.weight_dist not in WEIGHT_DISTS:
            raise GeneratorError(f"weight_dist must be one of {WEIGHT_DISTS}")
        if self.release not in RELEASE_PROCESSES:
            raise GeneratorError(f"release must be one of {RELEASE_PROCESSES}")
        if not 0 < self.size_low <= self.size_high:
            raise GeneratorError("need 0 < size_low <= size_high")
        if not 0 < self.speed_low <= self.speed_high:
            raise GeneratorError("need 0 < speed_low <= speed_high")
        if not 0 < self.demand_density <= 1:
            raise GeneratorError("demand_density must lie in (0, 1]")
        if not 0 <= self.zero_speed_prob < 1:
            raise GeneratorError("zero_speed_prob must lie in [0, 1)")
        if self.arrival_rate <= 0 or self.weight_high < 1:
            raise GeneratorError("arrival_rate must be positive and weight_high >= 1")


def _sizes(rng: np.random.Generator, p: GeneratorParams) -> np.ndarray:
    if p.size_dist == "unit":
        return np.ones(p.n)
    if p.size_dist == "uniform":
        return rng.uniform(p.size_low, p.size_high, p.n)
    if p.size_dist == "exponential":
        return np.maximum(rng.exponential(p.size_high, p.n), p.size_low)
    return (rng.pareto(2.5, p.n) + 1.0) * p.size_low


def _weights(rng: np.random.Generator, p: GeneratorParams) -> np.ndarray:
    if p.weight_dist == "unit":
        return np.ones(p.n)
    if p.weight_dist == "uniform":
        return rng.uniform(1.0, p.weight_high, p.n)
    return rng.integers(1, int(p.weight_high) + 1, p.n).astype(float)


def _releases(rng: np.random.Generator, p: GeneratorParams) -> np.ndarray:
    if p.release == "batch":
        return np.zeros(p.n)
    gaps = rng.exponential(1.0 / p.arrival_rate, p.n)
    gaps[0] = 0.0
    return np.cumsum(gaps)


def _payloads(rng: np.random.Generator, family: str, p: GeneratorParams) -> np.ndarray:
    if family in ("multidim", "all_or_nothing"):
        high = 1.0 if family == "multidim" else 0.6
        vals = rng.uniform(0.05, high, (p.n, p.m))
        mask = rng.random((p.n, p.m)) < p.demand_density
    else:
        vals = rng.uniform(p.speed_low, p.speed_high, (p.n, p.m))
        mask = rng.random((p.n, p.m)) >= p.zero_speed_prob
    # every job keeps at least one positive entry
    empty = np.flatnonzero(~mask.any(axis=1))
    mask[empty, rng.integers(0, p.m, empty.size)] = True
    return np.where(mask, vals, 0.0)


def gen_family(family: str, params: GeneratorParams, seed: int) -> Instance:
    params.validate(family)
    if family == "tree_lb":
        from .tree import gen_lower_bound_tree
        return gen_lower_bound_tree(1, seed).to_instance(family="tree_lb")

    rng = np.random.default_rng(seed)
    sizes = _sizes(rng, params)
    weights = _weights(rng, params)
    releases = _releases(rng, params)
    payloads = _payloads(rng, family, params)
    jobs = tuple(
        make_job(j, weights[j], sizes[j], releases[j], payloads[j])
        for j in range(params.n)
    )
    metadata = {"generator": "gen_family", "family": family, "seed": int(seed), "params": asdict(params)}
    logger.debug(f"generated {family} instance n={params.n} m={params.m} seed={seed}")
    return Instance(family=family, jobs=jobs, capacities=tuple([1.0] * params.m), metadata=metadata)


def gen_flowtime_concat(base: Instance, copies: int, gap: float) -> Instance:
    """Release `copies` copies of `base` at 0, gap, 2*gap, ... on the same machines."""
    if base.family not in ("unrelated", "tree_lb"):
        raise GeneratorError(f"concatenation supports unrelated/tree_lb bases, got '{base.family}'")
    if copies < 1:
        raise GeneratorError(f"copies must be >= 1, got {copies}")
    if gap <= 0:
        raise GeneratorError(f"gap must be positive, got {gap}")
    if any(j.release != 0 for j in base.jobs):
        raise GeneratorError("base instance must release every job at time 0")
    if copies == 1:
        return base
    stride = max(j.id for j in base.jobs) + 1
    jobs = []
    for c in range(copies):
        for j in base.jobs:
            jobs.append(replace(j, id=c * stride + j.id, release=c * gap))
    metadata = {"generator": "gen_flowtime_concat", "copies": copies, "gap": gap,
                "base": dict(base.metadata)}
    return Instance(family=base.family, jobs=tuple(jobs), capacities=base.capacities, metadata=metadata)


def params_from_dict(d: Optional[dict]) -> GeneratorParams:
    d = dict(d or {})
    try:
        return GeneratorParams(**d)
    except TypeError as e:
        raise GeneratorError(f"bad generator parameters: {e}") from e

from typing import Any

from ..errors import ConfigError
from .base import Scheduler, SchedulerDecision
from .blass import (
    BlassConfig,
    BlassScheduler,
    BlassState,
    MachineState,
    blass_decision,
    check_slaps_bounds,
    dispatch,
    rate_L,
    rearrange,
    slaps_shares,
)
from .drf import DominantResourceFairness, drf_allocate
from .maxmin import MaxMinFair, maxmin_allocate, progressive_fill
from .proportional_fairness import ProportionalFairness, pf_allocate

SCHEDULERS = {
    "pf": ProportionalFairness,
    "maxmin": MaxMinFair,
    "drf": DominantResourceFairness,
    "blass": BlassScheduler,
}


def make_scheduler(name: str, **params: Any) -> Scheduler:
    try:
        cls = SCHEDULERS[name]
    except KeyError:
        raise ConfigError(f"unknown scheduler '{name}', choose from {sorted(SCHEDULERS)}") from None
    try:
        return cls(**params)
    except TypeError as e:
        raise ConfigError(f"bad parameters for scheduler '{name}': {e}") from e

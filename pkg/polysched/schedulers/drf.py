import logging

from ..errors import UnsupportedFamilyError
from .base import Scheduler, SchedulerDecision
from .maxmin import progressive_fill

logger = logging.getLogger(__name__)


def dominant_shares(payloads, capacities):
    """m_j = max_d f_jd / R_d for every job."""
    return {j: max(f / R for f, R in zip(demand, capacities)) for j, demand in payloads.items()}


def drf_allocate(view) -> SchedulerDecision:
    """Unweighted dominant resource fairness by progressive filling."""
    if view.family != "multidim":
        raise UnsupportedFamilyError(f"drf needs a multidim instance, got '{view.family}'")
    P = view.polytope()
    dominant = dominant_shares(view.payloads, view.capacities)
    rates = progressive_fill(P, {j: 1.0 / m for j, m in dominant.items()})
    return SchedulerDecision(rates=rates)


class DominantResourceFairness(Scheduler):
    name = "drf"
    families = ("multidim",)

    def decide(self, view) -> SchedulerDecision:
        return drf_allocate(view)

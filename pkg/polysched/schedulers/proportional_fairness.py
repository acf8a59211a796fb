import logging
from typing import Any, Dict, Mapping, Optional

from ..polytope.packing_polytope import Row
from ..solver.eg_solver import solve_eg
from ..utils.defaults import DEFAULT_MAX_ITERS, DEFAULT_TOL
from .base import Scheduler, SchedulerDecision

logger = logging.getLogger(__name__)


def pf_allocate(view, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                warm: Optional[SchedulerDecision] = None, cuts: Optional[Mapping[str, Row]] = None) -> SchedulerDecision:
    P = view.polytope()
    a = solve_eg(P, view.weights, tol=tol, max_iters=max_iters, warm=warm, cuts=cuts)
    return SchedulerDecision(rates=a.rates, duals=a.duals, rows=a.rows, shares=a.shares, report=a.report)


class ProportionalFairness(Scheduler):
    """Weighted proportional fairness, re-solved at every arrival and completion.

    The previous allocation warm-starts the dual solve, and cuts found for
    lifted families are kept for later events.
    """
    name = "pf"

    def __init__(self, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS, warm_start: bool = True):
        self.tol = tol
        self.max_iters = max_iters
        self.warm_start = warm_start
        self._cuts: Dict[str, Row] = {}
        self._last: Optional[SchedulerDecision] = None

    def reset(self, family: str) -> None:
        super().reset(family)
        self._cuts = {}
        self._last = None

    def decide(self, view) -> SchedulerDecision:
        d = pf_allocate(view, self.tol, self.max_iters,
                        warm=self._last if self.warm_start else None,
                        cuts=self._cuts if self.warm_start else None)
        for key, row in d.rows.items():
            if key.startswith("cut:"):
                self._cuts.setdefault(key, row)
        self._last = d
        logger.debug(f"pf t={view.time:.6g}: {len(d.rows)} rows, kkt worst {d.report.worst:.2e}")
        return d

    def info(self) -> Dict[str, Any]:
        return {"name": self.name, "tol": self.tol}

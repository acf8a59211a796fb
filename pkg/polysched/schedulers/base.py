from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

from ..errors import UnsupportedFamilyError
from ..polytope.packing_polytope import Row
from ..utils.defaults import FAMILIES


@dataclass
class SchedulerDecision:
    rates: Dict[int, float]
    duals: Dict[str, float] = field(default_factory=dict)
    rows: Dict[str, Row] = field(default_factory=dict)
    shares: Dict[int, Dict[int, float]] = field(default_factory=dict)
    report: Optional[Any] = None


class Scheduler:
    """Event-driven rate allocator.

    The engine calls `reset` once, then at every event `on_completion`,
    `on_arrival` and `decide`, in that order. Only `decide` must be
    implemented; the hooks are for stateful policies.
    """
    name = "base"
    families: Tuple[str, ...] = FAMILIES

    def reset(self, family: str) -> None:
        if family not in self.families:
            raise UnsupportedFamilyError(f"{self.name} does not support family '{family}'")

    def on_arrival(self, view, job_ids: Sequence[int]) -> None:
        pass

    def on_completion(self, view, job_ids: Sequence[int]) -> None:
        pass

    def decide(self, view) -> SchedulerDecision:
        raise NotImplementedError

    def info(self) -> Dict[str, Any]:
        return {"name": self.name}

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..errors import InfeasibleDecisionError, LivelockError, NoProgressError, SimulationError
from ..instances.job import Instance
from ..polytope.packing_polytope import PackingPolytope, build_polytope, check_feasible
from ..utils.defaults import FEASIBILITY_TOL, TIE_TOL, WALL_CLOCK_BUDGET
from .trace import Event, Segment, Trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchedulerView:
    """What a scheduler may see at an event: no sizes, no remaining work."""
    time: float
    family: str
    alive: Tuple[int, ...]
    weights: Mapping[int, float]
    payloads: Mapping[int, Tuple[float, ...]]
    ranks: Mapping[int, int]
    capacities: Tuple[float, ...]
    speed: float
    builder: Callable[[Iterable[int]], PackingPolytope] = field(repr=False, compare=False)

    def polytope(self, alive: Optional[Iterable[int]] = None) -> PackingPolytope:
        return self.builder(self.alive if alive is None else alive)


def _blind(inst: Instance) -> Instance:
    jobs = tuple(replace(j, size=1.0) for j in inst.jobs)
    return Instance(family=inst.family, jobs=jobs, capacities=inst.capacities)


def next_completion(remaining: Mapping[int, float], rates: Mapping[int, float],
                    speed: float = 1.0) -> Tuple[float, List[int]]:
    times = {j: remaining[j] / (speed * rates[j]) for j in remaining if rates.get(j, 0.0) > 0}
    if not times:
        raise NoProgressError("every alive job has rate zero")
    delta = min(times.values())
    done = sorted(j for j, t in times.items() if t - delta <= TIE_TOL)
    return delta, done


def simulate(inst: Instance, sched, speed: float = 1.0, budget: float = WALL_CLOCK_BUDGET,
             feasibility_tol: float = FEASIBILITY_TOL) -> Trace:
    """Run `sched` on `inst` at the given speed, re-deciding rates only at arrivals and completions."""
    if not math.isfinite(speed) or speed < 1.0:
        raise SimulationError(f"speed must be a finite number >= 1, got {speed}")
    sched.reset(inst.family)
    blind = _blind(inst)
    ranks = inst.ranks
    pending = list(inst.jobs)
    remaining: Dict[int, float] = {}
    alive: List[int] = []
    segments: List[Segment] = []
    events: List[Event] = []
    completions: Dict[int, float] = {}
    rows = {}
    arrived: List[int] = []
    now = 0.0
    started = time.monotonic()

    def view() -> SchedulerView:
        return SchedulerView(
            time=now, family=inst.family, alive=tuple(alive),
            weights={j: inst.job_by_id[j].weight for j in alive},
            payloads={j: inst.job_by_id[j].payload for j in alive},
            ranks={j: ranks[j] for j in alive}, capacities=inst.capacities, speed=speed,
            builder=lambda ids: build_polytope(blind, ids))

    while pending or alive:
        if time.monotonic() - started > budget:
            raise LivelockError(f"wall-clock budget of {budget}s exceeded at t={now}")
        while pending and pending[0].release <= now:
            job = pending.pop(0)
            alive.append(job.id)
            remaining[job.id] = job.size
            arrived.append(job.id)
        if not alive:
            nxt = pending[0].release
            segments.append(Segment(start=now, end=nxt, rates={}))
            events.append(Event(time=now, kind="idle", jobs=[]))
            now = nxt
            continue
        alive.sort(key=ranks.__getitem__)

        v = view()
        if arrived:
            sched.on_arrival(v, arrived)
            events.append(Event(time=now, kind="arrival", jobs=list(arrived)))
            arrived = []
        decision = sched.decide(v)
        rates = {j: float(decision.rates.get(j, 0.0)) for j in alive}
        _check_decision(inst, blind, decision, rates, alive, now, feasibility_tol)
        for key, row in decision.rows.items():
            rows.setdefault(key, {}).update(row)

        nxt = pending[0].release if pending else math.inf
        try:
            delta, done = next_completion(remaining, rates, speed)
        except NoProgressError:
            if not pending:
                raise LivelockError(f"no alive job makes progress at t={now} and no arrival is pending")
            delta, done = math.inf, []
        if now + delta > nxt + TIE_TOL:
            end, done = nxt, []
        elif abs(now + delta - nxt) <= TIE_TOL:
            end = nxt
        else:
            end = now + delta
        if end <= now:
            raise NoProgressError(f"event at t={now} does not advance time")

        segments.append(Segment(start=now, end=end, rates=rates, duals=dict(decision.duals),
                                shares={j: dict(s) for j, s in decision.shares.items()}))
        for j in alive:
            remaining[j] -= speed * rates[j] * (end - now)
        for j in done:
            completions[j] = end
            del remaining[j]
            alive.remove(j)
        logger.debug(f"t={now:.6g}..{end:.6g} alive={len(alive) + len(done)} completed={done}")
        now = end
        if done:
            sched.on_completion(view(), done)
            events.append(Event(time=now, kind="completion", jobs=list(done)))

    return Trace(family=inst.family, speed=speed, scheduler=sched.info(), segments=segments,
                 completions=completions, releases=inst.releases(), weights=inst.weights(),
                 sizes=inst.sizes(), rows=rows, events=events)


def _check_decision(inst: Instance, blind: Instance, decision, rates: Dict[int, float],
                    alive: Sequence[int], now: float, tol: float) -> None:
    extra = set(decision.rates) - set(alive)
    if extra:
        raise InfeasibleDecisionError(f"rates for jobs {sorted(extra)} that are not alive at t={now}")
    negative = [j for j, x in rates.items() if x < 0 or not math.isfinite(x)]
    if negative:
        raise InfeasibleDecisionError(f"invalid rates for jobs {negative} at t={now}")
    report = check_feasible(build_polytope(blind, alive), rates, tol)
    if not report.feasible:
        segment = Segment(start=now, end=now, rates=rates, duals=dict(decision.duals))
        raise InfeasibleDecisionError(
            f"{inst.family} rates at t={now} violate the polytope by {report.max_violation:.3e} "
            f"(rows {report.violated_rows})", segment=segment)

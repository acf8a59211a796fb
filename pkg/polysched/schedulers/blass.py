import bisect
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..errors import InvariantViolationError, SchedulerError, UnprocessableJobError
from ..utils.defaults import DEFAULT_EPSILON
from .base import Scheduler, SchedulerDecision

logger = logging.getLogger(__name__)

INVARIANT_TOL = 1e-12


@dataclass(frozen=True)
class BlassConfig:
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise SchedulerError(f"epsilon must be positive, got {self.epsilon}")
        inv = 1.0 / self.epsilon
        if abs(inv - round(inv)) > 1e-9:
            raise SchedulerError(f"1/epsilon must be an integer, got {inv}")

    @property
    def k(self) -> int:
        return int(round(1.0 / self.epsilon))

    @property
    def eta(self) -> float:
        return 1.0 + 3.0 * self.epsilon


@dataclass
class MachineState:
    id: int
    jobs: List[int] = field(default_factory=list)
    job_ranks: List[int] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.jobs)

    def add(self, job: int, rank: int) -> None:
        pos = bisect.bisect_left(self.job_ranks, rank)
        self.job_ranks.insert(pos, rank)
        self.jobs.insert(pos, job)

    def remove(self, job: int) -> None:
        pos = self.jobs.index(job)
        del self.jobs[pos]
        del self.job_ranks[pos]

    def local_rank(self, job: int) -> int:
        return self.jobs.index(job) + 1

    def earlier(self, rank: int) -> int:
        """Number of held jobs with global rank below `rank`."""
        return bisect.bisect_left(self.job_ranks, rank)


@dataclass
class BlassState:
    machines: List[MachineState]
    sigma: Dict[int, int] = field(default_factory=dict)
    ranks: Dict[int, int] = field(default_factory=dict)
    speeds: Dict[int, Tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def empty(cls, m: int) -> "BlassState":
        return cls(machines=[MachineState(i) for i in range(m)])

    def place(self, job: int, machine: int) -> None:
        self.machines[machine].add(job, self.ranks[job])
        self.sigma[job] = machine

    def move(self, job: int, machine: int) -> None:
        self.machines[self.sigma[job]].remove(job)
        self.place(job, machine)

    def drop(self, job: int) -> int:
        i = self.sigma.pop(job)
        self.machines[i].remove(job)
        return i

    def alive(self) -> List[int]:
        return sorted(self.sigma, key=self.ranks.__getitem__)


def slaps_shares(N: int, k: int, eta: float = 1.0) -> List[float]:
    """Rate share of the job with local rank r among N jobs: eta * r^k / sum_a a^k."""
    if N < 1:
        raise SchedulerError(f"need at least one job, got {N}")
    total = sum(a ** k for a in range(1, N + 1))
    return [eta * r ** k / total for r in range(1, N + 1)]


def check_slaps_bounds(k: int, n: int) -> Tuple[bool, bool]:
    """n^k / sum_{a<=n} a^k <= (k+1)/n and n^k / sum_{a<n} a^k >= (k+1)/n, exactly."""
    bound = Fraction(k + 1, n)
    upper = Fraction(n ** k, sum(a ** k for a in range(1, n + 1))) <= bound
    below = sum(a ** k for a in range(1, n))
    lower = True if below == 0 else Fraction(n ** k, below) >= bound
    return upper, lower


def rate_L(i: int, j: int, state: BlassState) -> float:
    """Rate j would get on machine i if it ranked last among i's earlier jobs."""
    held = state.machines[i]
    before = held.earlier(state.ranks[j])
    return state.speeds[j][i] / (before + 1)


def dispatch(j: int, state: BlassState) -> int:
    speeds = state.speeds[j]
    if not any(s > 0 for s in speeds):
        raise UnprocessableJobError(j, "zero speed on every machine")
    best, best_L = 0, -1.0
    for i in range(len(state.machines)):
        L = rate_L(i, j, state)
        if L > best_L:
            best, best_L = i, L
    return best


def rearrange(state: BlassState, departed: int, machine: int, departed_rank: Optional[int] = None) -> List[Tuple[int, int, int]]:
    """Walk later-ranked jobs in rank order, moving each onto the machine with slack.

    `departed` must already be off `machine`. Returns the moves as
    (job, from, to) triples.
    """
    rank = state.ranks[departed] if departed_rank is None else departed_rank
    b = machine
    moves = []
    for j in state.alive():
        if state.ranks[j] <= rank:
            continue
        here = state.sigma[j]
        if here == b:
            continue
        if rate_L(b, j, state) > rate_L(here, j, state):
            state.move(j, b)
            moves.append((j, here, b))
            b = here
    return moves


def blass_decision(state: BlassState, config: BlassConfig) -> SchedulerDecision:
    """SLAPS(k) rates on every machine, in unit-speed polytope terms.

    The engine runs the schedule at speed eta, which multiplies these rates.
    """
    rates: Dict[int, float] = {}
    shares: Dict[int, Dict[int, float]] = {}
    for held in state.machines:
        if not held.jobs:
            continue
        nu = slaps_shares(held.count, config.k, 1.0)
        for r, j in enumerate(held.jobs):
            rates[j] = nu[r] * state.speeds[j][held.id]
            shares[j] = {held.id: nu[r]}
    return SchedulerDecision(rates=rates, shares=shares)


class BlassScheduler(Scheduler):
    """Dispatch to the machine maximizing L, SLAPS(k) per machine, rearrange on completion."""
    name = "blass"
    families = ("unrelated", "tree_lb")

    def __init__(self, epsilon: float = DEFAULT_EPSILON, check_invariants: bool = False):
        self.config = BlassConfig(epsilon)
        self.check_invariants = check_invariants
        self.invariant_log: List[Dict[str, Any]] = []
        self.state: Optional[BlassState] = None
        self._warned = False
        self._last_L: Dict[int, float] = {}
        self._last_earlier: Dict[int, Tuple[int, int]] = {}

    def reset(self, family: str) -> None:
        super().reset(family)
        self.state = None
        self.invariant_log = []
        self._warned = False
        self._last_L = {}
        self._last_earlier = {}

    def _ensure_state(self, view) -> BlassState:
        if self.state is None:
            self.state = BlassState.empty(len(view.capacities))
        return self.state

    def on_arrival(self, view, job_ids: Sequence[int]) -> None:
        state = self._ensure_state(view)
        if not self._warned and any(view.weights[j] != 1.0 for j in job_ids):
            logger.warning("blass targets unweighted flow time; job weights are ignored")
            self._warned = True
        for j in sorted(job_ids, key=view.ranks.__getitem__):
            state.ranks[j] = view.ranks[j]
            state.speeds[j] = tuple(view.payloads[j])
            state.place(j, dispatch(j, state))

    def on_completion(self, view, job_ids: Sequence[int]) -> None:
        state = self._ensure_state(view)
        departed = []
        for j in sorted(job_ids, key=state.ranks.__getitem__):
            departed.append((j, state.ranks[j], state.drop(j)))
            self._last_L.pop(j, None)
            self._last_earlier.pop(j, None)
        # every completed job is off its machine before any rearrange runs
        for j, rank, i in departed:
            moves = rearrange(state, j, i, departed_rank=rank)
            if moves:
                logger.debug(f"rearrange after job {j} at t={view.time:.6g}: {moves}")

    def decide(self, view) -> SchedulerDecision:
        state = self._ensure_state(view)
        self._check(view.time, state)
        return blass_decision(state, self.config)

    def _violation(self, time: float, invariant: str, witness: Dict[str, Any]) -> None:
        entry = {"time": time, "invariant": invariant, **witness}
        self.invariant_log.append(entry)
        logger.error(f"{invariant} violated at t={time:.6g}: {witness}")
        if self.check_invariants:
            raise InvariantViolationError(invariant, entry)

    def _check(self, time: float, state: BlassState) -> None:
        for j in state.alive():
            here = state.sigma[j]
            L_here = rate_L(here, j, state)
            for i in range(len(state.machines)):
                if rate_L(i, j, state) > L_here * (1.0 + INVARIANT_TOL) + INVARIANT_TOL:
                    self._violation(time, "dispatch optimality", {"job": j, "machine": i, "current": here})
            earlier = state.machines[here].earlier(state.ranks[j])
            prev = self._last_earlier.get(j)
            if prev is not None and prev[0] == here and earlier > prev[1]:
                self._violation(time, "earlier-count monotonicity",
                                {"job": j, "machine": here, "before": prev[1], "after": earlier})
            self._last_earlier[j] = (here, earlier)
            last = self._last_L.get(j)
            if last is not None and L_here < last * (1.0 - INVARIANT_TOL) - INVARIANT_TOL:
                self._violation(time, "L monotonicity", {"job": j, "before": last, "after": L_here})
            self._last_L[j] = L_here

    def info(self) -> Dict[str, Any]:
        return {"name": self.name, "epsilon": self.config.epsilon, "k": self.config.k, "eta": self.config.eta}

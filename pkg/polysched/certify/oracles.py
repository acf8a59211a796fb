import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Tuple

from ..engine.trace import Trace
from ..errors import CertificateError, OracleError
from ..instances.job import Instance
from ..polytope.packing_polytope import build_polytope, job_caps
from ..utils.defaults import BRUTE_FORCE_MAX_JOBS, BRUTE_FORCE_MAX_SLOTS, DEFAULT_CERT_S
from .completion_cert import check_completion_cert, completion_duals
from .slotting import slot_trace

logger = logging.getLogger(__name__)

OBJECTIVES = ("completion", "flow")
EXACT_DENOMINATOR = 10**6


@dataclass
class OracleResult:
    value: float
    bias_bound: float = 0.0


def smith_opt(inst: Instance) -> float:
    """Optimal total weighted completion time on one unit-rate resource with no releases."""
    if inst.family != "multidim" or inst.dims != 1:
        raise OracleError(f"smith_opt needs a single-resource multidim instance, got {inst.family} with {inst.dims} dims")
    R = inst.capacities[0]
    for j in inst.jobs:
        if j.release != 0.0:
            raise OracleError(f"job {j.id} is released at {j.release}, smith_opt needs all releases at 0")
        if abs(j.payload[0] - R) > 1e-12 * R:
            raise OracleError(f"job {j.id} demands {j.payload[0]} of capacity {R}, smith_opt needs f = R")
    order = sorted(inst.jobs, key=lambda j: (-j.weight / j.size, j.id))
    now = total = 0.0
    for j in order:
        now += j.size
        total += j.weight * now
    return total


def _exact(x: float) -> Fraction:
    return Fraction(x).limit_denominator(EXACT_DENOMINATOR)


def brute_force_opt(inst: Instance, objective: str = "completion", delta: float = 1.0) -> OracleResult:
    """Exact optimum over slotted unrelated-machine schedules by dynamic programming.

    Exponential in the number of jobs; for tests only. Each slot runs an
    injective partial job-to-machine assignment; a job on machine i does
    s_ij * delta work in that slot and completes at the exact moment its
    remaining work runs out. Work is tracked as fractions.
    """
    if objective not in OBJECTIVES:
        raise OracleError(f"objective must be one of {OBJECTIVES}, got '{objective}'")
    if inst.family not in ("unrelated", "tree_lb"):
        raise OracleError(f"brute_force_opt needs an unrelated instance, got '{inst.family}'")
    n = len(inst.jobs)
    if n > BRUTE_FORCE_MAX_JOBS:
        raise OracleError(f"brute_force_opt handles at most {BRUTE_FORCE_MAX_JOBS} jobs, got {n}")
    if not delta > 0:
        raise OracleError(f"delta must be positive, got {delta}")
    jobs = inst.jobs
    M = inst.dims
    width = _exact(delta)
    work = tuple(_exact(j.size) for j in jobs)
    avail = tuple(math.ceil(j.release / delta - 1e-9) for j in jobs)
    speed = tuple(tuple(_exact(s) for s in j.payload) for j in jobs)
    offset = tuple(j.release if objective == "flow" else 0.0 for j in jobs)

    @lru_cache(maxsize=None)
    def best(t: int, rem: Tuple[Fraction, ...]) -> float:
        if not any(rem):
            return 0.0
        if t >= BRUTE_FORCE_MAX_SLOTS:
            return math.inf
        ready = [c for c in range(n) if rem[c] > 0 and avail[c] <= t]
        value = math.inf
        for choice in itertools.product(range(-1, M), repeat=len(ready)):
            used = [i for i in choice if i >= 0]
            if len(used) != len(set(used)):
                continue
            nxt = list(rem)
            cost = 0.0
            for c, i in zip(ready, choice):
                if i < 0 or speed[c][i] == 0:
                    continue
                done = speed[c][i] * width
                if done >= nxt[c]:
                    finish = t * width + nxt[c] / speed[c][i]
                    cost += jobs[c].weight * (float(finish) - offset[c])
                    nxt[c] = Fraction(0)
                else:
                    nxt[c] -= done
            value = min(value, cost + best(t + 1, tuple(nxt)))
        return value

    value = best(0, work)
    best.cache_clear()
    if math.isinf(value):
        raise OracleError(f"no slotted schedule finishes within {BRUTE_FORCE_MAX_SLOTS} slots of width {delta}")
    bias = n * delta * max(j.weight for j in jobs)
    return OracleResult(value=value, bias_bound=bias)


def flowtime_lower_bound(inst: Instance, tr: Trace, s: float = DEFAULT_CERT_S,
                         delta: Optional[float] = None) -> float:
    """Certified lower bound on the optimal weighted flow time at the trace's speed."""
    P = build_polytope(inst, inst.job_ids)
    caps: Dict[int, float] = job_caps(P)
    solo = sum(j.weight * j.size / (tr.speed * caps[j.id]) for j in inst.jobs)
    bound = solo
    if tr.has_duals and any(seg.duals for seg in tr.segments):
        try:
            st = slot_trace(tr, delta)
            cert = completion_duals(st, tr.weights, tr.sizes, s, opt_speed=tr.speed)
            report = check_completion_cert(cert, st, tr.weights, tr.sizes)
        except CertificateError as e:
            logger.debug(f"completion certificate unavailable for the flow bound: {e}")
        else:
            if report.ok:
                released = sum(j.weight * j.release for j in inst.jobs)
                bound = max(bound, cert.lower_bound - released)
            else:
                logger.warning("completion certificate failed; using the solo-rate flow bound only")
    return bound

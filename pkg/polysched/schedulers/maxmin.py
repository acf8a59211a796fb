import logging
from typing import Dict, Mapping, Optional

import numpy as np
from scipy.optimize import linprog

from ..errors import SchedulerError
from ..polytope.packing_polytope import PackingPolytope, gauge
from .base import Scheduler, SchedulerDecision

logger = logging.getLogger(__name__)

SATURATION_TOL = 1e-12
LP_SLACK = 1e-9


def progressive_fill(P: PackingPolytope, speeds: Optional[Mapping[int, float]] = None) -> Dict[int, float]:
    """Water-filling on the projected rows of P.

    Every unfrozen job j grows at rate speeds[j] (default 1); when a row
    saturates, every unfrozen job in it freezes.
    """
    if P.is_lifted:
        raise SchedulerError("progressive_fill needs a projected polytope")
    B = P.matrix
    u = np.array([float((speeds or {}).get(j, 1.0)) for j in P.job_ids])
    x = np.zeros(P.n)
    frozen = np.zeros(P.n, dtype=bool)
    while not frozen.all():
        growth = B[:, ~frozen] @ u[~frozen]
        room = 1.0 - B @ x
        live = growth > 0
        if not live.any():
            raise SchedulerError(f"jobs {[P.job_ids[k] for k in np.flatnonzero(~frozen)]} are in no row")
        dt = float(np.min(room[live] / growth[live]))
        x[~frozen] += dt * u[~frozen]
        saturated = live & (1.0 - B @ x <= SATURATION_TOL)
        hit = (B[saturated] > 0).any(axis=0) & ~frozen
        if not hit.any():
            # the minimizing row lost saturation to rounding; freeze its members
            d = np.flatnonzero(live)[np.argmin(room[live] / growth[live])]
            hit = (B[d] > 0) & ~frozen
        frozen |= hit
    return {j: float(v) for j, v in zip(P.job_ids, x)}


def lifted_fill(P: PackingPolytope) -> Dict[int, float]:
    """Max-min fair rates on a lifted polytope, one LP level at a time."""
    A, b, nz = P.lp_form()
    n = P.n
    fixed: Dict[int, float] = {}
    level = 0.0
    while len(fixed) < n:
        free = [k for k in range(n) if P.job_ids[k] not in fixed]
        bounds = _bounds(P, fixed, nz)
        # variables (x, z, t): maximize t with every free x_k >= t
        c = np.zeros(n + nz + 1)
        c[-1] = -1.0
        A_lvl = np.hstack([A, np.zeros((A.shape[0], 1))])
        rows = [A_lvl]
        for k in free:
            r = np.zeros(n + nz + 1)
            r[k] = -1.0
            r[-1] = 1.0
            rows.append(r[None, :])
        res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate([b, np.zeros(len(free))]),
                      bounds=bounds + [(0, None)], method="highs")
        if res.status != 0:
            raise SchedulerError(f"max-min level LP failed: {res.message}")
        level = float(res.x[-1])
        newly = []
        for k in free:
            if _max_single(P, A, b, nz, fixed, free, k, level) <= level * (1.0 + 1e-7) + LP_SLACK:
                newly.append(k)
        if not newly:
            newly = free
        for k in newly:
            fixed[P.job_ids[k]] = level
        logger.debug(f"max-min level {level:.6g} froze {[P.job_ids[k] for k in newly]}")
    return {j: fixed[j] for j in P.job_ids}


def _bounds(P: PackingPolytope, fixed: Mapping[int, float], nz: int):
    bounds = []
    for j in P.job_ids:
        if j in fixed:
            bounds.append((fixed[j] * (1.0 - LP_SLACK), fixed[j]))
        else:
            bounds.append((0, None))
    return bounds + [(0, None)] * nz


def _max_single(P, A, b, nz, fixed, free, k, level) -> float:
    n = P.n
    c = np.zeros(n + nz)
    c[k] = -1.0
    bounds = _bounds(P, fixed, nz)
    for other in free:
        if other != k:
            bounds[other] = (level * (1.0 - LP_SLACK), None)
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        return level
    return float(-res.fun)


def _finish(P: PackingPolytope, rates: Dict[int, float]) -> SchedulerDecision:
    gamma, _, z = gauge(P, rates)
    if gamma > 1.0:
        rates = {j: x / gamma for j, x in rates.items()}
        z = None if z is None else z / gamma
    return SchedulerDecision(rates=rates, shares=P.shares(z))


def maxmin_allocate(view) -> SchedulerDecision:
    P = view.polytope()
    if P.is_lifted:
        return _finish(P, lifted_fill(P))
    speeds = None
    if view.family == "multidim" and len(view.capacities) == 1:
        # single resource: equalize x_j * f_j
        speeds = {j: 1.0 / view.payloads[j][0] for j in P.job_ids}
    return _finish(P, progressive_fill(P, speeds))


class MaxMinFair(Scheduler):
    """Max-min fairness; on one resource this is round robin in normalized units."""
    name = "maxmin"

    def decide(self, view) -> SchedulerDecision:
        return maxmin_allocate(view)

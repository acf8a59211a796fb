import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionMismatchError, NonConvergenceError, SolverError
from ..instances.job import Instance
from ..polytope.packing_polytope import PackingPolytope, Row, cut_key, gauge, rows_to_matrix
from ..utils.defaults import DEFAULT_MAX_ITERS, DEFAULT_TOL, RATE_CLAMP

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
EPS_BAR = 1e-3
NOISE = 1e-13
MAX_CUT_ROUNDS = 200


@dataclass
class KKTReport:
    primal: float
    complementary: float
    stationarity: float
    dual_sum_gap: float
    tol: float = DEFAULT_TOL

    @property
    def worst(self) -> float:
        return max(self.primal, self.complementary, self.stationarity, self.dual_sum_gap)

    @property
    def certified(self) -> bool:
        return self.worst <= self.tol

    def as_dict(self) -> Dict[str, float]:
        return {"primal": self.primal, "complementary": self.complementary,
                "stationarity": self.stationarity, "dual_sum_gap": self.dual_sum_gap}


@dataclass
class Allocation:
    """Rates, row duals and the projected rows those duals belong to."""
    rates: Dict[int, float]
    duals: Dict[str, float]
    objective: float
    iterations: int
    rows: Dict[str, Row] = field(default_factory=dict)
    shares: Dict[int, Dict[int, float]] = field(default_factory=dict)
    clamped: bool = False
    report: Optional[KKTReport] = None

    def polytope(self, family: str = "explicit") -> PackingPolytope:
        keys = tuple(self.rows)
        return PackingPolytope(family=family, job_ids=tuple(self.rates), row_keys=keys,
                               rows=tuple(self.rows[k] for k in keys))


@dataclass
class PriceReport:
    prices: Dict[int, float]
    budget_residuals: Dict[int, float]
    unsold: List[int]

    @property
    def max_budget_residual(self) -> float:
        return max(self.budget_residuals.values(), default=0.0)


def _weight_vector(job_ids: Sequence[int], weights: Mapping[int, float]) -> np.ndarray:
    missing = [j for j in job_ids if j not in weights]
    if missing:
        raise DimensionMismatchError(f"no weight for jobs {missing}")
    w = np.array([float(weights[j]) for j in job_ids])
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise SolverError("weights must be positive and finite")
    return w


def _dual_value(B: np.ndarray, w: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    s = B.T @ y
    if np.any(s <= 0):
        return np.inf, s
    return float(y.sum() - w @ np.log(s)), s


def _residuals(B: np.ndarray, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    slack = B @ x - 1.0
    primal = float(max(0.0, slack.max())) if slack.size else 0.0
    cs = float(np.abs(y * slack).max()) if slack.size else 0.0
    return primal, cs, abs(float(y.sum() - w.sum()))


def _solve_rows(B: np.ndarray, w: np.ndarray, tol: float, max_iters: int,
                y0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, int]:
    """Projected Newton on min_y>=0 sum(y) - sum_j w_j log((B^T y)_j).

    Rates are read off as x_j = w_j / (B^T y)_j, so stationarity holds exactly
    and the loop drives primal feasibility and complementary slackness.
    """
    R = B.shape[0]
    W = float(w.sum())
    y = np.full(R, W / R) if y0 is None else np.maximum(np.asarray(y0, dtype=float), 0.0)
    f, s = _dual_value(B, w, y)
    if not np.isfinite(f):
        y = y + W / R
        f, s = _dual_value(B, w, y)
    target = tol / 10.0
    best = (np.inf, w / s, y)
    for it in range(1, max_iters + 1):
        x = w / s
        g = 1.0 - B @ x
        primal, cs, gap = _residuals(B, w, x, y)
        worst = max(primal, cs, gap)
        if worst < best[0]:
            best = (worst, x, y)
        if worst <= target:
            return x, y, it

        eps = min(EPS_BAR, float(np.linalg.norm(y - np.maximum(y - g, 0.0))))
        active = (y <= eps) & (g > 0)
        free = ~active
        hess = (B * (x * x / w)) @ B.T
        p = np.zeros(R)
        if free.any():
            hf = hess[np.ix_(free, free)]
            mu = float(np.mean(np.diag(hf))) * (1e-12 + min(1e-2, float(np.abs(g[free]).max())))
            p[free] = -np.linalg.solve(hf + mu * np.eye(int(free.sum())), g[free])
        if active.any():
            p[active] = -g[active] / np.diag(hess)[active]

        alpha = 1.0
        moved = False
        while alpha > 1e-20:
            y_new = np.maximum(y + alpha * p, 0.0)
            f_new, s_new = _dual_value(B, w, y_new)
            if np.isfinite(f_new):
                pred = ARMIJO * (alpha * float(-g[free] @ p[free]) + float(g[active] @ (y - y_new)[active]))
                floor = NOISE * max(1.0, abs(f))
                if f - f_new >= pred or (pred <= floor and f_new <= f + floor):
                    moved = True
                    break
            alpha *= 0.5
        if not moved:
            logger.debug(f"line search stalled at iteration {it}, residual {worst:.3e}")
            break
        y, f, s = y_new, f_new, s_new

    worst, x, y = best
    if worst <= tol:
        return x, y, max_iters
    raise NonConvergenceError(f"dual Newton stopped with residual {worst:.3e}",
                              best=(x, y), report=worst)


def _clamp(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    clamped = bool(np.any(x < RATE_CLAMP))
    return np.maximum(x, RATE_CLAMP), clamped


def _initial_rows(P: PackingPolytope, cuts: Optional[Mapping[str, Row]]) -> Dict[str, Row]:
    rows: Dict[str, Row] = {}
    alive = set(P.job_ids)
    for key, row in zip(P.row_keys, P.rows):
        if any(c > 0 for c in row.values()):
            rows[key] = row
    for key, row in (cuts or {}).items():
        restricted = {j: c for j, c in row.items() if j in alive and c > 0}
        if not restricted:
            continue
        if restricted != row:
            key = cut_key(restricted)
        rows.setdefault(key, restricted)
    return rows


def _warm_duals(keys: Sequence[str], warm, W: float) -> Optional[np.ndarray]:
    if warm is None or not warm.duals:
        return None
    y = np.array([warm.duals.get(k, 0.0) for k in keys])
    return y + 1e-3 * W / len(keys)


def _single_job(P: PackingPolytope, rows: Dict[str, Row], w: np.ndarray) -> Allocation:
    j = P.job_ids[0]
    key = max(rows, key=lambda k: rows[k].get(j, 0.0))
    x = 1.0 / rows[key][j]
    duals = {k: 0.0 for k in rows}
    duals[key] = float(w[0])
    shares = {}
    if P.is_lifted:
        _, _, z = gauge(P, {j: x})
        shares = P.shares(z)
    return Allocation(rates={j: x}, duals=duals, objective=float(w[0] * np.log(x)), iterations=0,
                      rows=rows, shares=shares)


def solve_eg(P: PackingPolytope, weights: Mapping[int, float], tol: float = DEFAULT_TOL,
             max_iters: int = DEFAULT_MAX_ITERS, warm=None,
             cuts: Optional[Mapping[str, Row]] = None) -> Allocation:
    """Maximize sum_j w_j log x_j over P.

    Lifted polytopes are handled by row generation: the projected rows start
    at the single-job caps (plus any `cuts` still valid for the alive set) and
    grow by gauge cuts until x lies in P up to tol.
    """
    w = _weight_vector(P.job_ids, weights)
    if P.n == 0:
        return Allocation(rates={}, duals={}, objective=0.0, iterations=0, report=KKTReport(0, 0, 0, 0, tol))
    rows = _initial_rows(P, cuts if P.is_lifted else None)
    if P.n == 1:
        a = _single_job(P, rows, w)
        a.report = kkt_residuals(a.polytope(P.family), weights, a.rates, a.duals, tol)
        return a

    total = 0
    keys = list(rows)
    y0 = _warm_duals(keys, warm, float(w.sum()))
    z = None
    for rnd in range(MAX_CUT_ROUNDS):
        B = rows_to_matrix([rows[k] for k in keys], P.index)
        x, y, its = _solve_rows(B, w, tol, max_iters, y0)
        total += its
        if not P.is_lifted:
            break
        gamma, cut, z = gauge(P, dict(zip(P.job_ids, x)))
        logger.debug(f"cut round {rnd}: gamma={gamma:.12f} rows={len(keys)}")
        if gamma <= 1.0 + tol / 10.0 or cut is None:
            break
        key = cut_key(cut)
        if key in rows:
            logger.debug(f"cut {key} already present, stopping at gamma={gamma:.3e}")
            break
        rows[key] = cut
        keys.append(key)
        y0 = np.append(y, 0.0)
    else:
        raise NonConvergenceError(f"row generation did not settle within {MAX_CUT_ROUNDS} rounds",
                                  best=dict(zip(P.job_ids, x)))

    x, clamped = _clamp(x)
    rates = {j: float(v) for j, v in zip(P.job_ids, x)}
    duals = {k: float(v) for k, v in zip(keys, y)}
    a = Allocation(rates=rates, duals=duals, objective=float(w @ np.log(x)), iterations=total,
                   rows={k: rows[k] for k in keys}, shares=P.shares(z), clamped=clamped)
    if clamped:
        logger.warning(f"rates clamped at {RATE_CLAMP} for some of jobs {list(P.job_ids)}")
    a.report = kkt_residuals(a.polytope(P.family), weights, rates, duals, tol)
    if not a.report.certified:
        raise NonConvergenceError(f"allocation fails KKT at tol {tol}: {a.report.as_dict()}",
                                  best=a, report=a.report)
    return a


def kkt_residuals(P: PackingPolytope, weights: Mapping[int, float], x: Mapping[int, float],
                  y: Union[Mapping[str, float], Sequence[float]], tol: float = DEFAULT_TOL) -> KKTReport:
    """Residuals of the optimality conditions on the projected rows of P."""
    xv = P.as_vector(x)
    w = _weight_vector(P.job_ids, weights)
    if isinstance(y, Mapping):
        unknown = set(y) - set(P.row_keys)
        if unknown:
            raise DimensionMismatchError(f"duals for unknown rows {sorted(unknown)}")
        yv = np.array([float(y.get(k, 0.0)) for k in P.row_keys])
    else:
        yv = np.asarray(y, dtype=float)
        if yv.shape != (len(P.rows),):
            raise DimensionMismatchError(f"{yv.size} duals for {len(P.rows)} rows")
    if np.any(xv <= 0):
        raise SolverError("rates must be strictly positive")
    if np.any(yv < 0):
        raise SolverError("duals must be nonnegative")
    B = P.matrix
    primal, cs, gap = _residuals(B, w, xv, yv)
    marginal = w / xv
    stationarity = float(np.max(np.abs(marginal - B.T @ yv) / marginal)) if P.n else 0.0
    return KKTReport(primal=primal, complementary=cs, stationarity=stationarity, dual_sum_gap=gap, tol=tol)


def equilibrium_prices(inst: Instance, a: Allocation, tol: float = DEFAULT_TOL) -> PriceReport:
    """Per-unit resource prices of a multidimensional allocation and each job's budget residual."""
    if inst.family != "multidim":
        raise SolverError(f"prices are defined for multidim instances, got '{inst.family}'")
    prices = {}
    for d, R in enumerate(inst.capacities):
        prices[d] = a.duals.get(f"resource:{d}", 0.0) / R
    residuals = {}
    for j, x in a.rates.items():
        f = inst.job_by_id[j].payload
        spend = x * (sum(prices[d] * f[d] for d in prices) + a.duals.get(f"cap:{j}", 0.0))
        residuals[j] = abs(spend - inst.job_by_id[j].weight)
    unsold = []
    for d, lam in prices.items():
        used = sum(x * inst.job_by_id[j].payload[d] for j, x in a.rates.items())
        if lam > tol and used < inst.capacities[d] * (1.0 - 10 * tol):
            unsold.append(d)
    if unsold:
        raise SolverError(f"priced resources {unsold} are not fully allocated")
    return PriceReport(prices=prices, budget_residuals=residuals, unsold=unsold)

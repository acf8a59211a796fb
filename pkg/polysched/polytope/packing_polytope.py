import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from ..errors import DimensionMismatchError, PolytopeError, UnprocessableJobError
from ..instances.job import Instance
from ..utils.defaults import DEFAULT_TOL

logger = logging.getLogger(__name__)

Row = Dict[int, float]

CUT_DIGITS = 10


@dataclass(frozen=True, eq=False)
class Lifting:
    """Lifted description x <= Q z, H z <= 1, z >= 0 over the alive jobs.

    `labels[k]` names z coordinate k: (machine, job) for assignments, (page,)
    for broadcast pages and a frozenset of job ids for all-or-nothing subsets.
    """
    kind: str
    Q: np.ndarray
    H: np.ndarray
    labels: Tuple[Any, ...]
    h_keys: Tuple[str, ...]


@dataclass(frozen=True, eq=False)
class PackingPolytope:
    """B x <= 1 over the alive jobs of one instance.

    `rows` is the sparse projected description. For lifted families it holds
    only valid single-job caps; the exact polytope is `lifting`, and further
    valid rows are produced by `gauge` cuts.
    """
    family: str
    job_ids: Tuple[int, ...]
    row_keys: Tuple[str, ...]
    rows: Tuple[Row, ...]
    lifting: Optional[Lifting] = None
    caps: Dict[int, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.job_ids)

    @property
    def is_lifted(self) -> bool:
        return self.lifting is not None

    @cached_property
    def index(self) -> Dict[int, int]:
        return {j: k for k, j in enumerate(self.job_ids)}

    @cached_property
    def matrix(self) -> np.ndarray:
        return rows_to_matrix(self.rows, self.index)

    def column(self, job_id: int) -> List[Tuple[int, float]]:
        return [(d, row[job_id]) for d, row in enumerate(self.rows) if row.get(job_id, 0.0) > 0]

    def as_vector(self, x: Mapping[int, float]) -> np.ndarray:
        if set(x) != set(self.job_ids):
            raise DimensionMismatchError(
                f"rate vector covers jobs {sorted(x)}, polytope covers {sorted(self.job_ids)}")
        return np.array([float(x[j]) for j in self.job_ids])

    @classmethod
    def from_matrix(cls, B: Sequence[Sequence[float]], job_ids: Sequence[int]) -> "PackingPolytope":
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[1] != len(job_ids):
            raise DimensionMismatchError(f"matrix shape {B.shape} does not match {len(job_ids)} jobs")
        if np.any(B < 0) or not np.all(np.isfinite(B)):
            raise PolytopeError("coefficients must be finite and nonnegative")
        for k, j in enumerate(job_ids):
            if not np.any(B[:, k] > 0):
                raise UnprocessableJobError(j)
        rows = tuple({int(j): float(B[d, k]) for k, j in enumerate(job_ids) if B[d, k] > 0}
                     for d in range(B.shape[0]))
        keys = tuple(f"row:{d}" for d in range(B.shape[0]))
        return cls(family="explicit", job_ids=tuple(int(j) for j in job_ids), row_keys=keys, rows=rows)

    def lp_form(self) -> Tuple[np.ndarray, np.ndarray, int]:
        """(A_ub, b_ub, n_z) over the stacked variable (x, z)."""
        if not self.is_lifted:
            return self.matrix, np.ones(len(self.rows)), 0
        Q, H = self.lifting.Q, self.lifting.H
        n, nz = Q.shape
        top = np.hstack([np.eye(n), -Q])
        bottom = np.hstack([np.zeros((H.shape[0], n)), H])
        b = np.concatenate([np.zeros(n), np.ones(H.shape[0])])
        return np.vstack([top, bottom]), b, nz

    def shares(self, z: Optional[np.ndarray]) -> Dict[int, Dict[int, float]]:
        """Per-job machine (or page) shares read from a lifted witness."""
        if z is None or not self.is_lifted or self.lifting.kind == "subsets":
            return {}
        out: Dict[int, Dict[int, float]] = {j: {} for j in self.job_ids}
        if self.lifting.kind == "assignment":
            for k, (i, j) in enumerate(self.lifting.labels):
                if z[k] > 0:
                    out[j][i] = float(z[k])
        else:
            for k, (i,) in enumerate(self.lifting.labels):
                for j in self.job_ids:
                    if z[k] > 0 and self.lifting.Q[self.index[j], k] > 0:
                        out[j][i] = float(z[k])
        return out


@dataclass
class FeasibilityReport:
    max_violation: float
    violated_rows: List[str]
    feasible: bool
    gamma: float = 0.0
    witness: Optional[np.ndarray] = None


def rows_to_matrix(rows: Sequence[Row], index: Mapping[int, int]) -> np.ndarray:
    B = np.zeros((len(rows), len(index)))
    for d, row in enumerate(rows):
        for j, c in row.items():
            if j in index:
                B[d, index[j]] = c
    return B


def cut_key(row: Row) -> str:
    text = ",".join(f"{j}:{round(c, CUT_DIGITS)!r}" for j, c in sorted(row.items()))
    return "cut:" + hashlib.sha1(text.encode()).hexdigest()[:12]


def build_polytope(inst: Instance, alive) -> PackingPolytope:
    alive = set(alive)
    unknown = alive - set(inst.job_by_id)
    if unknown:
        raise PolytopeError(f"jobs {sorted(unknown)} are not part of the instance")
    ids = tuple(j.id for j in inst.jobs if j.id in alive)
    if inst.family == "multidim":
        return _multidim(inst, ids)
    if inst.family in ("unrelated", "tree_lb"):
        lifting = _assignment_lifting(inst, ids)
    elif inst.family == "broadcast":
        lifting = _page_lifting(inst, ids)
    elif inst.family == "all_or_nothing":
        lifting = _subset_lifting(inst, ids)
    else:
        raise PolytopeError(f"unsupported family '{inst.family}'")
    caps = _lifted_caps(lifting, ids)
    rows = tuple({j: 1.0 / caps[j]} for j in ids)
    keys = tuple(f"cap:{j}" for j in ids)
    return PackingPolytope(family=inst.family, job_ids=ids, row_keys=keys, rows=rows,
                           lifting=lifting, caps=caps)


def _multidim(inst: Instance, ids: Tuple[int, ...]) -> PackingPolytope:
    rows, keys = [], []
    for d, R in enumerate(inst.capacities):
        row = {j: inst.job_by_id[j].payload[d] / R for j in ids if inst.job_by_id[j].payload[d] > 0}
        if row:
            rows.append(row)
            keys.append(f"resource:{d}")
    for j in ids:
        rows.append({j: 1.0})
        keys.append(f"cap:{j}")
    caps = {}
    for j in ids:
        coefs = [row[j] for row in rows if j in row]
        caps[j] = 1.0 / max(coefs)
    return PackingPolytope(family=inst.family, job_ids=ids, row_keys=tuple(keys), rows=tuple(rows), caps=caps)


def _speed_matrix(inst: Instance, ids: Tuple[int, ...]) -> np.ndarray:
    """speeds[i, k] = s_ij scaled by the capacity of machine/page i."""
    if not ids:
        return np.zeros((inst.dims, 0))
    S = np.array([inst.job_by_id[j].payload for j in ids], dtype=float).T
    return S * np.asarray(inst.capacities)[:, None]


def _assignment_lifting(inst: Instance, ids: Tuple[int, ...]) -> Lifting:
    S = _speed_matrix(inst, ids)
    M, n = S.shape
    labels = [(i, ids[k]) for i in range(M) for k in range(n) if S[i, k] > 0]
    Q = np.zeros((n, len(labels)))
    H = np.zeros((M + n, len(labels)))
    col = {j: k for k, j in enumerate(ids)}
    for v, (i, j) in enumerate(labels):
        Q[col[j], v] = S[i, col[j]]
        H[i, v] = 1.0
        H[M + col[j], v] = 1.0
    h_keys = tuple(f"machine:{i}" for i in range(M)) + tuple(f"job:{j}" for j in ids)
    return Lifting(kind="assignment", Q=Q, H=H, labels=tuple(labels), h_keys=h_keys)


def _page_lifting(inst: Instance, ids: Tuple[int, ...]) -> Lifting:
    S = _speed_matrix(inst, ids)
    M = S.shape[0]
    return Lifting(kind="pages", Q=S.T.copy(), H=np.ones((1, M)),
                   labels=tuple((i,) for i in range(M)), h_keys=("pages",))


def _subset_lifting(inst: Instance, ids: Tuple[int, ...]) -> Lifting:
    alive = set(ids)
    subsets = [S for S in inst.feasible_subsets if S and S <= alive]
    Q = np.zeros((len(ids), len(subsets)))
    for v, S in enumerate(subsets):
        for k, j in enumerate(ids):
            if j in S:
                Q[k, v] = 1.0
    return Lifting(kind="subsets", Q=Q, H=np.ones((1, len(subsets))),
                   labels=tuple(subsets), h_keys=("subsets",))


def _lifted_caps(lifting: Lifting, ids: Tuple[int, ...]) -> Dict[int, float]:
    """Largest x_j reachable with every other job at zero."""
    caps = {}
    for k, j in enumerate(ids):
        q = lifting.Q[k]
        if not np.any(q > 0):
            reason = "fits in no feasible subset" if lifting.kind == "subsets" else "all-zero speeds"
            raise UnprocessableJobError(j, reason)
        # a lone job may put all of its H budget on its best coordinate
        caps[j] = float(q.max())
    return caps


def job_caps(P: PackingPolytope) -> Dict[int, float]:
    return dict(P.caps)


def gauge(P: PackingPolytope, x: Mapping[int, float]) -> Tuple[float, Optional[Row], Optional[np.ndarray]]:
    """Smallest gamma with x in gamma * P, a valid row a.x <= 1 attaining it, and a witness z.

    On the projected form the row is the most loaded one. On the lifted form
    the row comes from the LP duals and is rescaled by its exact support value
    so that it is tight on P; the witness satisfies x <= Q z, H z <= gamma.
    """
    xv = P.as_vector(x)
    if np.any(xv < 0):
        raise PolytopeError("rates must be nonnegative")
    if not P.is_lifted:
        if not P.rows:
            return 0.0, None, None
        loads = P.matrix @ xv
        d = int(np.argmax(loads))
        return float(loads[d]), dict(P.rows[d]), None
    if not np.any(xv > 0):
        return 0.0, None, np.zeros(P.lifting.Q.shape[1])

    Q, H = P.lifting.Q, P.lifting.H
    n, nz = Q.shape
    h = H.shape[0]
    c = np.zeros(nz + 1)
    c[-1] = 1.0
    A = np.vstack([np.hstack([-Q, np.zeros((n, 1))]),
                   np.hstack([H, -np.ones((h, 1))])])
    b = np.concatenate([-xv, np.zeros(h)])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * (nz + 1), method="highs")
    if res.status != 0:
        raise PolytopeError(f"gauge LP failed: {res.message}")
    gamma = float(res.x[-1])
    marg = -np.asarray(res.ineqlin.marginals)
    a = np.maximum(marg[:n], 0.0)
    sigma = support_value(P, a)
    if sigma <= 0:
        return gamma, None, res.x[:-1]
    row = {j: float(a[k] / sigma) for k, j in enumerate(P.job_ids) if a[k] > 0}
    return gamma, row, res.x[:-1]


def support_value(P: PackingPolytope, a: np.ndarray) -> float:
    """max a.x over the lifted polytope."""
    Q, H = P.lifting.Q, P.lifting.H
    res = linprog(-(a @ Q), A_ub=H, b_ub=np.ones(H.shape[0]),
                  bounds=[(0, None)] * Q.shape[1], method="highs")
    if res.status != 0:
        raise PolytopeError(f"support LP failed: {res.message}")
    return float(-res.fun)


def check_feasible(P: PackingPolytope, x: Mapping[int, float], tol: float = DEFAULT_TOL) -> FeasibilityReport:
    xv = P.as_vector(x)
    if not P.is_lifted:
        if not P.rows:
            return FeasibilityReport(0.0, [], True)
        slack = P.matrix @ xv - 1.0
        violated = [P.row_keys[d] for d in np.flatnonzero(slack > tol)]
        worst = float(slack.max())
        return FeasibilityReport(worst, violated, worst <= tol, gamma=worst + 1.0)
    gamma, row, z = gauge(P, x)
    violation = gamma - 1.0
    violated = [cut_key(row)] if violation > tol and row else []
    return FeasibilityReport(violation, violated, violation <= tol, gamma=gamma, witness=z)


def injective_decomposition(z: np.ndarray, tol: float = 1e-9) -> List[Tuple[float, Dict[int, int]]]:
    """Split a doubly substochastic machine x job share matrix into injective job->machine maps.

    Returns (coefficient, {job column: machine row}) pairs whose weighted sum
    reproduces z entrywise; the coefficients sum to 1.
    """
    z = np.asarray(z, dtype=float)
    M, n = z.shape
    if np.any(z.sum(axis=1) > 1 + tol) or np.any(z.sum(axis=0) > 1 + tol):
        raise PolytopeError("share matrix is not doubly substochastic")
    K = M + n
    full = np.zeros((K, K))
    full[:M, :n] = z
    full[:M, n:] = np.diag(np.maximum(1.0 - z.sum(axis=1), 0.0))
    full[M:, :n] = np.diag(np.maximum(1.0 - z.sum(axis=0), 0.0))
    full[M:, n:] = z.T
    parts = []
    remaining = 1.0
    while remaining > tol:
        rows, cols = linear_sum_assignment(np.where(full > tol, 0.0, 1.0))
        if np.any(full[rows, cols] <= tol):
            raise PolytopeError("no perfect matching in the share support")
        coef = float(full[rows, cols].min())
        full[rows, cols] -= coef
        remaining -= coef
        parts.append((coef, {int(c): int(r) for r, c in zip(rows, cols) if r < M and c < n}))
    return parts

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping

import numpy as np

from ..errors import CertificateError, MissingDualsError
from ..utils.defaults import DEFAULT_CERT_S
from .report import CertificateReport, Violation
from .slotting import SlottedTrace, weighted_median

logger = logging.getLogger(__name__)

MEDIAN_SLACK = 1e-9
CHECK_TOL = 1e-7


@dataclass
class CompletionDualCert:
    """Duals for the weighted-completion LP, fitted from a PF trace.

    `beta` is [slot, row] per unit time; `zeta` is the per-slot processed
    fraction median. The bound is on the optimum at `opt_speed`.
    """
    s: float
    opt_speed: float
    job_ids: List[int]
    row_keys: List[str]
    alpha: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray
    W: np.ndarray
    widths: np.ndarray

    @property
    def objective(self) -> float:
        return float(self.alpha.sum() - (self.beta.sum(axis=1) * self.widths).sum())

    @property
    def lower_bound(self) -> float:
        return self.objective / self.s

    def summary(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "opt_speed": self.opt_speed,
            "alpha": {str(j): float(a) for j, a in zip(self.job_ids, self.alpha)},
            "beta_at_zero": {k: float(b) for k, b in zip(self.row_keys, self.beta[0])} if len(self.beta) else {},
            "zeta_max": float(self.zeta.max()) if len(self.zeta) else 0.0,
            "objective": self.objective,
        }


def _vectors(st: SlottedTrace, weights: Mapping[int, float], sizes: Mapping[int, float]):
    w = np.array([weights[j] for j in st.job_ids], dtype=float)
    p = np.array([sizes[j] for j in st.job_ids], dtype=float)
    return w, p


def _ratios(st: SlottedTrace, p: np.ndarray) -> np.ndarray:
    """Processed fraction per unit time, [slot, job]."""
    return st.speed * st.rates / p[None, :]


def _medians(st: SlottedTrace, w: np.ndarray, rho: np.ndarray) -> np.ndarray:
    out = np.zeros(st.T)
    first = {}
    for t, seg in enumerate(st.segment):
        U = st.unsatisfied[t]
        if not U.any():
            continue
        key = (int(seg), U.tobytes())
        if key not in first:
            first[key] = weighted_median(rho[t, U], w[U])
        out[t] = first[key]
    return out


def _alpha(st: SlottedTrace, w: np.ndarray, rho: np.ndarray, zeta_rate: np.ndarray) -> np.ndarray:
    below = st.unsatisfied & (rho <= zeta_rate[:, None] * (1.0 + MEDIAN_SLACK))
    return (below * w[None, :] * st.widths[:, None]).sum(axis=0)


def _beta(st: SlottedTrace, zeta_rate: np.ndarray, s: float, opt_speed: float) -> np.ndarray:
    y = np.where(st.alive.any(axis=1)[:, None], st.duals, 0.0)
    inc = (zeta_rate * st.widths)[:, None] * y * (opt_speed / st.speed) / s
    return np.cumsum(inc[::-1], axis=0)[::-1]


def completion_duals(st: SlottedTrace, weights: Mapping[int, float], sizes: Mapping[int, float],
                     s: float = DEFAULT_CERT_S, opt_speed: float = 1.0) -> CompletionDualCert:
    """Weighted-median dual fitting on a slotted PF trace.

    Unreleased jobs belong to every slot's unsatisfied set with zero
    progress. Slots with no alive job get zero row duals.
    """
    if not s > 0 or not opt_speed > 0:
        raise CertificateError(f"s and opt_speed must be positive, got {s} and {opt_speed}")
    busy = st.alive.any(axis=1)
    if st.duals.shape[1] == 0 and busy.any():
        raise MissingDualsError("trace carries no row duals; certify a PF trace")
    missing = np.flatnonzero(busy & (st.duals.sum(axis=1) <= 0))
    if len(missing):
        raise MissingDualsError(f"no row duals in {len(missing)} busy slots, first at t={st.starts[missing[0]]:.6g}")
    w, p = _vectors(st, weights, sizes)
    rho = _ratios(st, p)
    zeta_rate = _medians(st, w, rho)
    W = (st.unsatisfied * w[None, :]).sum(axis=1)
    cert = CompletionDualCert(s=float(s), opt_speed=float(opt_speed), job_ids=list(st.job_ids),
                              row_keys=list(st.row_keys), alpha=_alpha(st, w, rho, zeta_rate),
                              beta=_beta(st, zeta_rate, s, opt_speed), zeta=zeta_rate * st.widths,
                              W=W, widths=st.widths.copy())
    logger.debug(f"completion duals: objective={cert.objective:.6g} over {st.T} slots")
    return cert


def _excess(lhs: np.ndarray, rhs: np.ndarray, scale: np.ndarray, tol: float) -> np.ndarray:
    return lhs - rhs - tol * np.maximum(scale, 1.0)


def check_completion_cert(cert: CompletionDualCert, st: SlottedTrace, weights: Mapping[int, float],
                          sizes: Mapping[int, float], tol: float = CHECK_TOL) -> CertificateReport:
    """Verify dual feasibility, the objective anchors and the construction itself."""
    w, p = _vectors(st, weights, sizes)
    p_opt = p / cert.opt_speed
    alg = float((w * st.completions).sum())
    report = CertificateReport(kind="completion", objective=cert.objective, lower_bound=cert.lower_bound, alg=alg)

    bad = np.flatnonzero(cert.alpha < -tol)
    for c in bad:
        report.add(Violation("nonnegativity", job=st.job_ids[c], residual=float(-cert.alpha[c])))
    for t, d in zip(*np.nonzero(cert.beta < -tol)):
        report.add(Violation("nonnegativity", slot=int(t), row=cert.row_keys[d], residual=float(-cert.beta[t, d])))

    # alpha_j / p_j - s B_j . beta_t <= w_j t / p_j for every slot start t >= r_j
    B = st.row_matrix()
    load = cert.s * (cert.beta @ B)
    lhs = cert.alpha[None, :] / p_opt[None, :] - load
    rhs = w[None, :] * st.starts[:, None] / p_opt[None, :]
    scale = np.maximum(np.abs(cert.alpha / p_opt)[None, :], np.maximum(load, rhs))
    excess = _excess(lhs, rhs, scale, tol)
    excess[st.starts[:, None] < st.releases[None, :] - 1e-12] = -np.inf
    for t, c in zip(*np.nonzero(excess > 0)):
        report.add(Violation("dual-1", job=st.job_ids[c], slot=int(t), residual=float(lhs[t, c] - rhs[t, c])))
    report.note("dual-1", max(0.0, float(np.max(lhs - rhs, where=np.isfinite(excess), initial=0.0))))
    tail = np.maximum(st.horizon, st.releases)
    for c in np.flatnonzero(cert.alpha > w * tail * (1.0 + tol) + tol):
        report.add(Violation("dual-1", job=st.job_ids[c], residual=float(cert.alpha[c] - w[c] * tail[c])))

    half = 0.5 * alg
    report.checks["alpha covers half of the weighted completion time"] = bool(cert.alpha.sum() >= half * (1.0 - tol))

    beta_sum = cert.beta.sum(axis=1)
    bound = 8.0 * cert.W / cert.s
    over = beta_sum - bound * (1.0 + tol) - 1e-12
    for t in np.flatnonzero(over > 0):
        report.add(Violation("beta mass", slot=int(t), residual=float(beta_sum[t] - bound[t])))
    report.note("beta mass", max(0.0, float(np.max(beta_sum - bound, initial=0.0))))

    _check_construction(cert, st, w, p, report, tol)

    done = st.q.sum(axis=0)
    report.slotting_error = float(np.max(np.abs(done - p) / p, initial=0.0))
    if not report.ok:
        logger.error(f"completion certificate failed: {report.violation_count} violations, checks={report.checks}")
    return report


def _check_construction(cert: CompletionDualCert, st: SlottedTrace, w: np.ndarray, p: np.ndarray,
                        report: CertificateReport, tol: float) -> None:
    rho = _ratios(st, p)
    zeta_rate = _medians(st, w, rho)
    stored = cert.zeta / st.widths
    gap = np.abs(stored - zeta_rate)
    for t in np.flatnonzero(gap > tol * np.maximum(zeta_rate, 1e-12)):
        report.add(Violation("median", slot=int(t), residual=float(stored[t] - zeta_rate[t])))
    report.note("median", float(gap.max(initial=0.0)))

    alpha = _alpha(st, w, rho, stored)
    gap = np.abs(cert.alpha - alpha)
    for c in np.flatnonzero(gap > tol * np.maximum(alpha, 1.0)):
        report.add(Violation("alpha construction", job=st.job_ids[c], residual=float(cert.alpha[c] - alpha[c])))
    report.note("alpha construction", float(gap.max(initial=0.0)))

    beta = _beta(st, stored, cert.s, cert.opt_speed)
    gap = np.abs(cert.beta - beta)
    for t, d in zip(*np.nonzero(gap > tol * np.maximum(beta, 1e-12))):
        report.add(Violation("beta construction", slot=int(t), row=cert.row_keys[d],
                             residual=float(cert.beta[t, d] - beta[t, d])))
    report.note("beta construction", float(gap.max(initial=0.0)))

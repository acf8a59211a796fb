import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..engine.trace import Trace
from ..errors import CertificateError
from ..instances.job import Instance
from ..schedulers.blass import BlassConfig
from .report import CertificateReport, Violation

logger = logging.getLogger(__name__)

CHECK_TOL = 1e-7


@dataclass
class UnrelatedDualCert:
    """Delay-accounting duals for the unrelated-machines flow-time LP.

    Arrays are indexed by segment and by `job_ids` column; `beta` is
    [segment, machine] per unit time. `delay` holds each segment's share
    of every job's total delay.
    """
    epsilon: float
    k: int
    eta: float
    job_ids: List[int]
    starts: np.ndarray
    widths: np.ndarray
    delay: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    machine: np.ndarray
    earlier: np.ndarray
    flow: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def Delta(self) -> np.ndarray:
        return self.delay.sum(axis=0)

    @property
    def objective(self) -> float:
        return float(self.alpha.sum() - (self.beta.sum(axis=1) * self.widths).sum())

    @property
    def expected_objective(self) -> float:
        e = self.epsilon
        return float(self.flow.sum()) * e * e / ((1 + 2 * e) * (1 + 3 * e))

    def summary(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon, "k": self.k, "eta": self.eta,
            "Delta": {str(j): float(d) for j, d in zip(self.job_ids, self.Delta)},
            "alpha": {str(j): float(a) for j, a in zip(self.job_ids, self.alpha)},
            "objective": self.objective,
            "expected_objective": self.expected_objective,
        }


def _config(tr: Trace, epsilon: Optional[float]) -> BlassConfig:
    if tr.scheduler.get("name") != "blass":
        raise CertificateError(f"trace was produced by '{tr.scheduler.get('name')}', not blass")
    if epsilon is None:
        epsilon = tr.scheduler.get("epsilon")
    if epsilon is None:
        raise CertificateError("trace does not record epsilon")
    config = BlassConfig(float(epsilon))
    if abs(tr.speed - config.eta) > 1e-9 * config.eta:
        raise CertificateError(f"blass trace must run at speed {config.eta}, got {tr.speed}")
    return config


def blass_duals(tr: Trace, epsilon: Optional[float] = None, machines: Optional[int] = None) -> UnrelatedDualCert:
    """Accumulate per-job delay over the trace and set alpha and beta from it."""
    config = _config(tr, epsilon)
    job_ids = sorted(tr.sizes, key=lambda j: (tr.releases[j], j))
    col = {j: c for c, j in enumerate(job_ids)}
    seen = [i for seg in tr.segments for sh in seg.shares.values() for i in sh]
    M = max(machines or 0, max(seen, default=-1) + 1)
    S, n = len(tr.segments), len(job_ids)
    delay = np.zeros((S, n))
    counts = np.zeros((S, M))
    machine = np.full((S, n), -1, dtype=int)
    earlier = np.zeros((S, n), dtype=int)
    scale = tr.speed / config.eta

    for s, seg in enumerate(tr.segments):
        if seg.rates and not seg.shares:
            raise CertificateError(f"segment at t={seg.start:.6g} has no machine shares")
        held: Dict[int, List[int]] = {}
        for j, sh in seg.shares.items():
            i = max(sh, key=sh.get)
            held.setdefault(i, []).append(j)
        for i, jobs in held.items():
            jobs.sort(key=col.__getitem__)
            counts[s, i] = len(jobs)
            prefix = 0.0
            for r, j in enumerate(jobs):
                nu = scale * seg.shares[j][i]
                c = col[j]
                machine[s, c] = i
                earlier[s, c] = r
                delay[s, c] = seg.length * (nu * (r + 1) + prefix)
                prefix += nu

    flow = np.array([tr.completions[j] - tr.releases[j] for j in job_ids])
    cert = UnrelatedDualCert(epsilon=config.epsilon, k=config.k, eta=config.eta, job_ids=job_ids,
                             starts=np.array([seg.start for seg in tr.segments]),
                             widths=np.array([seg.length for seg in tr.segments]),
                             delay=delay, alpha=delay.sum(axis=0) / (config.k + 2),
                             beta=counts / (config.k + 3), machine=machine, earlier=earlier, flow=flow)
    logger.debug(f"blass duals: objective={cert.objective:.6g}, flow={flow.sum():.6g}")
    return cert


def check_blass_cert(cert: UnrelatedDualCert, inst: Instance, tr: Trace, tol: float = CHECK_TOL) -> CertificateReport:
    """LP dual feasibility at every segment start and the horizon, plus the delay bounds."""
    jobs = inst.job_by_id
    ids = cert.job_ids
    if set(ids) != set(jobs):
        raise CertificateError("certificate and instance cover different jobs")
    p = np.array([jobs[j].size for j in ids])
    r = np.array([jobs[j].release for j in ids])
    speeds = np.array([jobs[j].payload for j in ids])
    M = speeds.shape[1]
    if cert.beta.shape[1] > M:
        raise CertificateError(f"certificate uses {cert.beta.shape[1]} machines, instance has {M}")
    beta = np.zeros((len(cert.starts), M))
    beta[:, :cert.beta.shape[1]] = cert.beta
    alg = float(cert.flow.sum())
    report = CertificateReport(kind="blass", objective=cert.objective, lower_bound=cert.objective, alg=alg)

    for c in np.flatnonzero(cert.alpha < -tol):
        report.add(Violation("nonnegativity", job=ids[c], residual=float(-cert.alpha[c])))
    for s, i in zip(*np.nonzero(beta < -tol)):
        report.add(Violation("nonnegativity", slot=int(s), row=f"machine:{i}", residual=float(-beta[s, i])))

    # s_ij alpha_j / p_j - beta_it <= s_ij (t - r_j) / p_j + 1, checked where beta changes
    horizon = tr.makespan
    times = np.append(cert.starts, horizon)
    beta_ext = np.vstack([beta, np.zeros((1, M))])
    sp = speeds.T[None, :, :] / p[None, None, :]
    lhs = sp * cert.alpha[None, None, :] - beta_ext[:, :, None]
    t_eff = np.maximum(times[:, None], r[None, :])
    rhs = sp * (t_eff - r[None, :])[:, None, :] + 1.0
    excess = lhs - rhs - tol * np.maximum(1.0, np.abs(lhs))
    past = times[:, None] >= r[None, :] - 1e-12
    past[-1, :] = True
    excess = np.where(past[:, None, :], excess, -np.inf)
    for s, i, c in zip(*np.nonzero(excess > 0)):
        report.add(Violation("lp dual", job=ids[c], slot=int(s), row=f"machine:{i}",
                             residual=float(lhs[s, i, c] - rhs[s, i, c])))
    report.note("lp dual", max(0.0, float(np.max(lhs - rhs, where=np.isfinite(excess), initial=0.0))))

    _check_delay_bounds(cert, tr, speeds, p, r, report, tol)
    _check_construction(cert, report, tol)

    total = float(cert.Delta.sum())
    report.checks["delay sums to flow time"] = math.isclose(total, alg, rel_tol=1e-6, abs_tol=1e-9)
    report.note("delay sum", abs(total - alg))
    report.checks["objective identity"] = math.isclose(cert.objective, cert.expected_objective,
                                                       rel_tol=1e-6, abs_tol=1e-9)
    if not report.ok:
        logger.error(f"blass certificate failed: {report.violation_count} violations, checks={report.checks}")
    return report


def _check_delay_bounds(cert: UnrelatedDualCert, tr: Trace, speeds: np.ndarray, p: np.ndarray,
                        r: np.ndarray, report: CertificateReport, tol: float) -> None:
    col = {j: c for c, j in enumerate(cert.job_ids)}
    work = np.zeros((len(tr.segments), len(cert.job_ids)))
    for s, seg in enumerate(tr.segments):
        for j, x in seg.rates.items():
            work[s, col[j]] = tr.speed * x * seg.length
    done_before = np.cumsum(work, axis=0) - work
    suffix = np.cumsum(cert.delay[::-1], axis=0)[::-1]
    Delta = cert.Delta
    factor = (cert.k + 2) / ((cert.k + 1) * cert.eta)
    for s, c in zip(*np.nonzero(cert.machine >= 0)):
        i = cert.machine[s, c]
        L = speeds[c, i] / (cert.earlier[s, c] + 1)
        residual = max(p[c] - done_before[s, c], 0.0)
        bound = factor * residual / L
        slack = tol * max(1.0, bound)
        if suffix[s, c] > bound + slack:
            report.add(Violation("residual delay", job=cert.job_ids[c], slot=int(s),
                                 residual=float(suffix[s, c] - bound)))
        total = (cert.k + 2) * (cert.starts[s] - r[c]) + bound
        if Delta[c] > total + tol * max(1.0, total):
            report.add(Violation("total delay", job=cert.job_ids[c], slot=int(s),
                                 residual=float(Delta[c] - total)))


def _check_construction(cert: UnrelatedDualCert, report: CertificateReport, tol: float) -> None:
    alpha = cert.Delta / (cert.k + 2)
    gap = np.abs(cert.alpha - alpha)
    for c in np.flatnonzero(gap > tol * np.maximum(alpha, 1e-12)):
        report.add(Violation("alpha construction", job=cert.job_ids[c], residual=float(cert.alpha[c] - alpha[c])))
    report.note("alpha construction", float(gap.max(initial=0.0)))
    counts = np.zeros_like(cert.beta)
    for s, c in zip(*np.nonzero(cert.machine >= 0)):
        counts[s, cert.machine[s, c]] += 1
    beta = counts / (cert.k + 3)
    gap = np.abs(cert.beta - beta)
    for s, i in zip(*np.nonzero(gap > tol * np.maximum(beta, 1e-12))):
        report.add(Violation("beta construction", slot=int(s), row=f"machine:{i}",
                             residual=float(cert.beta[s, i] - beta[s, i])))
    report.note("beta construction", float(gap.max(initial=0.0)))

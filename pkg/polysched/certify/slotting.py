import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..engine.trace import Trace
from ..errors import CertificateError, SlotWidthError
from ..polytope.packing_polytope import Row
from ..utils.defaults import MAX_SLOTS, MIN_SLOTS_PER_JOB, SLOT_DIVISOR

logger = logging.getLogger(__name__)


@dataclass
class SlottedTrace:
    """A trace cut into slots that never straddle a segment boundary.

    Arrays are indexed [slot] or [slot, job column]; `duals` is [slot, row].
    """
    delta: float
    starts: np.ndarray
    widths: np.ndarray
    segment: np.ndarray
    job_ids: List[int]
    q: np.ndarray
    rates: np.ndarray
    alive: np.ndarray
    unsatisfied: np.ndarray
    row_keys: List[str]
    rows: Dict[str, Row]
    duals: np.ndarray
    speed: float
    horizon: float
    releases: np.ndarray
    completions: np.ndarray

    @property
    def T(self) -> int:
        return len(self.starts)

    @property
    def index(self) -> Dict[int, int]:
        return {j: k for k, j in enumerate(self.job_ids)}

    def row_matrix(self) -> np.ndarray:
        """[row, job column] coefficients from the trace's row registry."""
        idx = self.index
        B = np.zeros((len(self.row_keys), len(self.job_ids)))
        for d, key in enumerate(self.row_keys):
            for j, c in self.rows[key].items():
                if j in idx:
                    B[d, idx[j]] = c
        return B


def weighted_median(values: Sequence[float], weights: Sequence[float]) -> float:
    """Smallest listed value m with the weight of values <= m at least half the total."""
    if len(values) == 0:
        raise CertificateError("weighted median of an empty list")
    if len(values) != len(weights):
        raise CertificateError("values and weights differ in length")
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, cum[-1] / 2.0 - 1e-15 * cum[-1]))
    return float(v[order][min(k, len(v) - 1)])


def default_delta(tr: Trace) -> float:
    peak = max((tr.speed * x for seg in tr.segments for x in seg.rates.values()), default=1.0)
    return min(tr.sizes.values()) / (SLOT_DIVISOR * peak)


def slot_trace(tr: Trace, delta: Optional[float] = None, min_slots: int = MIN_SLOTS_PER_JOB) -> SlottedTrace:
    """Split every segment into equal slots no wider than delta.

    Segment boundaries, and so releases and completions, fall on slot
    boundaries; q is integrated exactly from the segment rates.
    """
    if not tr.segments:
        raise CertificateError("trace has no segments")
    delta = default_delta(tr) if delta is None else float(delta)
    if not delta > 0:
        raise SlotWidthError(f"slot width must be positive, got {delta}")
    peak = max((tr.speed * x for seg in tr.segments for x in seg.rates.values()), default=0.0)
    if peak > 0 and min(tr.sizes.values()) / (peak * delta) < min_slots:
        raise SlotWidthError(
            f"slot width {delta:.3g} is too coarse: the smallest job spans fewer than {min_slots} slots")
    counts = [max(1, math.ceil(seg.length / delta - 1e-9)) for seg in tr.segments]
    if sum(counts) > MAX_SLOTS:
        raise SlotWidthError(f"{sum(counts)} slots exceed the limit of {MAX_SLOTS}")

    job_ids = sorted(tr.sizes, key=lambda j: (tr.releases[j], j))
    idx = {j: k for k, j in enumerate(job_ids)}
    row_keys = sorted(tr.rows)
    ridx = {k: d for d, k in enumerate(row_keys)}
    starts, widths, segment = [], [], []
    for s_idx, (seg, c) in enumerate(zip(tr.segments, counts)):
        edges = np.linspace(seg.start, seg.end, c + 1)
        edges[-1] = seg.end
        starts.extend(edges[:-1])
        widths.extend(np.diff(edges))
        segment.extend([s_idx] * c)
    starts = np.array(starts)
    widths = np.array(widths)
    segment = np.array(segment, dtype=int)

    S = len(tr.segments)
    seg_rates = np.zeros((S, len(job_ids)))
    seg_duals = np.zeros((S, len(row_keys)))
    for s_idx, seg in enumerate(tr.segments):
        for j, x in seg.rates.items():
            seg_rates[s_idx, idx[j]] = x
        for key, y in seg.duals.items():
            seg_duals[s_idx, ridx[key]] = y
    rates = seg_rates[segment]
    q = tr.speed * rates * widths[:, None]
    releases = np.array([tr.releases[j] for j in job_ids])
    completions = np.array([tr.completions.get(j, math.inf) for j in job_ids])
    unsatisfied = starts[:, None] < completions[None, :]
    alive = unsatisfied & (starts[:, None] >= releases[None, :])
    logger.debug(f"slotted {S} segments into {len(starts)} slots, delta={delta:.3g}")
    return SlottedTrace(delta=delta, starts=starts, widths=widths, segment=segment, job_ids=job_ids,
                        q=q, rates=rates, alive=alive, unsatisfied=unsatisfied, row_keys=row_keys,
                        rows={k: dict(tr.rows[k]) for k in row_keys}, duals=seg_duals[segment],
                        speed=tr.speed, horizon=tr.makespan, releases=releases, completions=completions)

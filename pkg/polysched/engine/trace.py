from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Tuple

from ..errors import IncompleteTraceError, SimulationError
from ..polytope.packing_polytope import Row
from ..utils.defaults import WORK_TOL
from ..utils.jsonio import decode_document, encode_document


@dataclass
class Segment:
    start: float
    end: float
    rates: Dict[int, float]
    duals: Dict[str, float] = field(default_factory=dict)
    shares: Dict[int, Dict[int, float]] = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.end - self.start

    @property
    def alive(self) -> List[int]:
        return list(self.rates)


@dataclass
class Event:
    time: float
    kind: str
    jobs: List[int]


@dataclass
class Trace:
    """Piecewise-constant schedule produced by the engine.

    Rates are in polytope units; job j is processed at speed * rates[j].
    `rows` maps every dual's row key to its coefficients.
    """
    family: str
    speed: float
    scheduler: Dict[str, Any]
    segments: List[Segment]
    completions: Dict[int, float]
    releases: Dict[int, float]
    weights: Dict[int, float]
    sizes: Dict[int, float]
    rows: Dict[str, Row] = field(default_factory=dict)
    events: List[Event] = field(default_factory=list)

    @property
    def makespan(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    @property
    def has_duals(self) -> bool:
        return all(seg.duals for seg in self.segments if seg.rates)

    def work_done(self) -> Dict[int, float]:
        done = {j: 0.0 for j in self.sizes}
        for seg in self.segments:
            for j, x in seg.rates.items():
                done[j] += self.speed * x * seg.length
        return done


@dataclass
class Metrics:
    weighted_completion: float
    weighted_flow: float
    total_flow: float
    makespan: float
    per_job: Dict[int, Tuple[float, float]]


@dataclass
class TraceCheck:
    work_residual: float
    partition_ok: bool
    event_count: int
    event_bound: int

    @property
    def ok(self) -> bool:
        return self.work_residual <= WORK_TOL and self.partition_ok and self.event_count <= self.event_bound


def metrics(tr: Trace) -> Metrics:
    missing = sorted(set(tr.releases) - set(tr.completions))
    if missing:
        raise IncompleteTraceError(f"jobs {missing} never completed")
    per_job = {}
    wc = wf = tf = 0.0
    for j, C in tr.completions.items():
        F = C - tr.releases[j]
        per_job[j] = (C, F)
        wc += tr.weights[j] * C
        wf += tr.weights[j] * F
        tf += F
    makespan = max(tr.completions.values(), default=0.0)
    return Metrics(weighted_completion=wc, weighted_flow=wf, total_flow=tf, makespan=makespan, per_job=per_job)


def check_trace(tr: Trace) -> TraceCheck:
    missing = sorted(set(tr.releases) - set(tr.completions))
    if missing:
        raise IncompleteTraceError(f"jobs {missing} never completed")
    done = tr.work_done()
    residual = max((abs(done[j] - p) / p for j, p in tr.sizes.items()), default=0.0)
    partition_ok = bool(tr.segments) and tr.segments[0].start == 0.0
    for a, b in zip(tr.segments, tr.segments[1:]):
        partition_ok = partition_ok and a.end == b.start and a.start < a.end
    for seg in tr.segments:
        for j in seg.rates:
            if seg.start < tr.releases[j] or seg.end > tr.completions[j]:
                partition_ok = False
    decisions = sum(1 for e in tr.events if e.kind in ("arrival", "completion"))
    return TraceCheck(work_residual=residual, partition_ok=partition_ok,
                      event_count=decisions, event_bound=2 * len(tr.sizes))


def _int_keys(d: Dict[str, Any]) -> Dict[int, Any]:
    return {int(k): v for k, v in d.items()}


def trace_to_dict(tr: Trace) -> Dict[str, Any]:
    doc = asdict(tr)
    doc["segments"] = [
        {"start": s.start, "end": s.end,
         "rates": {str(j): x for j, x in s.rates.items()},
         "duals": dict(s.duals),
         "shares": {str(j): {str(i): v for i, v in sh.items()} for j, sh in s.shares.items()}}
        for s in tr.segments
    ]
    for key in ("completions", "releases", "weights", "sizes"):
        doc[key] = {str(j): v for j, v in getattr(tr, key).items()}
    doc["rows"] = {k: {str(j): c for j, c in row.items()} for k, row in tr.rows.items()}
    return doc


def trace_from_dict(doc: Dict[str, Any]) -> Trace:
    try:
        segments = [
            Segment(start=float(s["start"]), end=float(s["end"]),
                    rates={int(j): float(x) for j, x in s["rates"].items()},
                    duals={k: float(v) for k, v in s.get("duals", {}).items()},
                    shares={int(j): _int_keys(sh) for j, sh in s.get("shares", {}).items()})
            for s in doc["segments"]
        ]
        return Trace(
            family=doc["family"], speed=float(doc["speed"]), scheduler=dict(doc.get("scheduler", {})),
            segments=segments,
            completions=_int_keys(doc["completions"]), releases=_int_keys(doc["releases"]),
            weights=_int_keys(doc["weights"]), sizes=_int_keys(doc["sizes"]),
            rows={k: _int_keys(row) for k, row in doc.get("rows", {}).items()},
            events=[Event(time=e["time"], kind=e["kind"], jobs=list(e["jobs"])) for e in doc.get("events", [])],
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise SimulationError(f"malformed trace document: {e}") from e


def export_trace(tr: Trace) -> str:
    return encode_document(trace_to_dict(tr))


def load_trace(text: str) -> Trace:
    return trace_from_dict(decode_document(text, SimulationError))

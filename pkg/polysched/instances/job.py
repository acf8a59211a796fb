from dataclasses import dataclass, field, asdict
from functools import cached_property
from typing import Any, Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from ..errors import InstanceParseError, InstanceValidationError
from ..utils.defaults import AON_MAX_JOBS, FAMILIES
from ..utils.jsonio import decode_document, encode_document, finite


@dataclass(frozen=True)
class Job:
    id: int
    weight: float
    size: float
    release: float
    payload: Tuple[float, ...]


@dataclass(frozen=True)
class Instance:
    """A scheduling instance of one polytope family.

    Jobs are kept sorted by (release, id); that order is the global rank.
    `capacities` holds R_d for multidim/all_or_nothing and one capacity per
    machine or page for the machine families.
    """
    family: str
    jobs: Tuple[Job, ...]
    capacities: Tuple[float, ...]
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(sorted(self.jobs, key=lambda j: (j.release, j.id))))
        object.__setattr__(self, "capacities", tuple(float(c) for c in self.capacities))
        validate_instance(self)

    @cached_property
    def job_by_id(self) -> Dict[int, Job]:
        return {j.id: j for j in self.jobs}

    @cached_property
    def ranks(self) -> Dict[int, int]:
        return {j.id: r for r, j in enumerate(self.jobs)}

    @property
    def job_ids(self) -> List[int]:
        return [j.id for j in self.jobs]

    @property
    def dims(self) -> int:
        return len(self.capacities)

    @cached_property
    def feasible_subsets(self) -> Tuple[FrozenSet[int], ...]:
        """Subsets whose summed demands fit the capacities (all_or_nothing only)."""
        if self.family != "all_or_nothing":
            return ()
        return enumerate_feasible_subsets(self.jobs, self.capacities)

    def weights(self) -> Dict[int, float]:
        return {j.id: j.weight for j in self.jobs}

    def sizes(self) -> Dict[int, float]:
        return {j.id: j.size for j in self.jobs}

    def releases(self) -> Dict[int, float]:
        return {j.id: j.release for j in self.jobs}


def enumerate_feasible_subsets(jobs: Sequence[Job], capacities: Sequence[float]) -> Tuple[FrozenSet[int], ...]:
    n = len(jobs)
    if n > AON_MAX_JOBS:
        raise InstanceValidationError(f"all_or_nothing supports at most {AON_MAX_JOBS} jobs, got {n}")
    demand = np.array([j.payload for j in jobs], dtype=float).reshape(n, len(capacities))
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    usage = bits @ demand
    fits = np.all(usage <= np.asarray(capacities)[None, :] * (1.0 + 1e-12), axis=1)
    ids = [j.id for j in jobs]
    return tuple(
        frozenset(ids[b] for b in range(n) if (mask >> b) & 1)
        for mask in masks[fits].tolist()
    )


def validate_instance(inst: Instance) -> None:
    if inst.family not in FAMILIES:
        raise InstanceValidationError(f"unknown family '{inst.family}'")
    if len(inst.capacities) == 0:
        raise InstanceValidationError("capacities must be nonempty")
    for c in inst.capacities:
        if not finite(c) or c <= 0:
            raise InstanceValidationError(f"capacity {c} must be a positive finite number")
    seen = set()
    for j in inst.jobs:
        if j.id in seen:
            raise InstanceValidationError("duplicate job id", j.id)
        seen.add(j.id)
        if not finite(j.weight) or j.weight <= 0:
            raise InstanceValidationError(f"weight {j.weight} must be positive", j.id)
        if not finite(j.size) or j.size <= 0:
            raise InstanceValidationError(f"size {j.size} must be positive", j.id)
        if not finite(j.release) or j.release < 0:
            raise InstanceValidationError(f"release {j.release} must be nonnegative", j.id)
        if len(j.payload) != len(inst.capacities):
            raise InstanceValidationError(
                f"payload has dimension {len(j.payload)}, instance has {len(inst.capacities)}", j.id)
        if any((not finite(v)) or v < 0 for v in j.payload):
            raise InstanceValidationError("payload entries must be nonnegative finite numbers", j.id)
        if not any(v > 0 for v in j.payload):
            raise InstanceValidationError("payload has no strictly positive entry", j.id)
    if inst.family == "all_or_nothing" and len(inst.jobs) > AON_MAX_JOBS:
        raise InstanceValidationError(f"all_or_nothing supports at most {AON_MAX_JOBS} jobs")


def make_job(id: int, weight: float, size: float, release: float, payload: Sequence[float]) -> Job:
    return Job(id=int(id), weight=float(weight), size=float(size), release=float(release),
               payload=tuple(float(v) for v in payload))


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    jobs = []
    for j in inst.jobs:
        d = asdict(j)
        d["payload"] = list(j.payload)
        jobs.append(d)
    return {
        "family": inst.family,
        "capacities": list(inst.capacities),
        "jobs": jobs,
        "metadata": dict(inst.metadata),
    }


def instance_from_dict(doc: Dict[str, Any]) -> Instance:
    for key in ("family", "capacities", "jobs"):
        if key not in doc:
            raise InstanceParseError(f"missing key '{key}'")
    if not isinstance(doc["jobs"], list) or not isinstance(doc["capacities"], list):
        raise InstanceParseError("'jobs' and 'capacities' must be lists")
    jobs = []
    for k, jd in enumerate(doc["jobs"]):
        if not isinstance(jd, dict):
            raise InstanceParseError(f"job entry {k} is not an object")
        missing = [f for f in ("id", "weight", "size", "release", "payload") if f not in jd]
        if missing:
            raise InstanceParseError(f"job entry {k} misses {missing}")
        if not isinstance(jd["id"], int) or isinstance(jd["id"], bool):
            raise InstanceParseError(f"job entry {k}: id must be an integer")
        for f in ("weight", "size", "release"):
            if not finite(jd[f]):
                raise InstanceValidationError(f"{f} must be a finite number", jd["id"])
        if not isinstance(jd["payload"], list) or not all(finite(v) for v in jd["payload"]):
            raise InstanceValidationError("payload must be a list of finite numbers", jd["id"])
        jobs.append(make_job(jd["id"], jd["weight"], jd["size"], jd["release"], jd["payload"]))
    if not all(finite(c) for c in doc["capacities"]):
        raise InstanceValidationError("capacities must be finite numbers")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InstanceParseError("'metadata' must be an object")
    return Instance(family=doc["family"], jobs=tuple(jobs),
                    capacities=tuple(doc["capacities"]), metadata=metadata)


def load_instance(text: str) -> Instance:
    doc = decode_document(text, InstanceParseError)
    return instance_from_dict(doc)


def emit_instance(inst: Instance) -> str:
    return encode_document(instance_to_dict(inst))


def canonical(text: str) -> str:
    return emit_instance(load_instance(text))

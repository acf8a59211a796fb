from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

MAX_WITNESSES = 50


@dataclass
class Violation:
    kind: str
    job: Optional[int] = None
    slot: Optional[int] = None
    row: Optional[str] = None
    residual: float = 0.0


@dataclass
class CertificateReport:
    """Outcome of a dual-fitting check.

    `lower_bound` is the certified lower bound on the optimum and `ratio` the
    algorithm's objective over it.
    """
    kind: str
    objective: float
    lower_bound: float
    alg: float
    checks: Dict[str, bool] = field(default_factory=dict)
    max_residual: Dict[str, float] = field(default_factory=dict)
    violations: List[Violation] = field(default_factory=list)
    violation_count: int = 0
    slotting_error: float = 0.0

    @property
    def ok(self) -> bool:
        return self.violation_count == 0 and all(self.checks.values())

    @property
    def ratio(self) -> float:
        return self.alg / self.lower_bound if self.lower_bound > 0 else float("inf")

    def add(self, v: Violation) -> None:
        self.violation_count += 1
        if len(self.violations) < MAX_WITNESSES:
            self.violations.append(v)

    def note(self, name: str, residual: float) -> None:
        self.max_residual[name] = max(self.max_residual.get(name, 0.0), float(residual))


def export_certificate(cert: Any, report: CertificateReport) -> Dict[str, Any]:
    doc = {
        "kind": report.kind,
        "ok": report.ok,
        "objective": report.objective,
        "lower_bound": report.lower_bound,
        "alg": report.alg,
        "ratio": report.ratio if report.lower_bound > 0 else None,
        "checks": dict(report.checks),
        "max_residual": dict(report.max_residual),
        "violation_count": report.violation_count,
        "violations": [asdict(v) for v in report.violations],
        "slotting_error": report.slotting_error,
    }
    doc["duals"] = cert.summary()
    return doc
